#pragma once

#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include "qec/codegen.h"

namespace qec {

struct RatePoint {
    int code_distance = 0;  // patch diameter (memory) or rounds (stability)
    uint64_t shots = 0;
    uint64_t errors = 0;

    double p_logical() const {
        return shots ? static_cast<double>(errors) / static_cast<double>(shots)
                     : 0.0;
    }
};

struct FitResult {
    double slope = 0.0;      // d log10(p_L) / d code_distance
    double intercept = 0.0;  // log10(p_L) at code_distance 0
    double suppression_db = 0.0;  // -10 * slope; 3.01 dB = halving per step
};

// Ordinary least squares of log10(p_L) on code distance. Requires >= 2
// points with distinct distances; throws "insufficient errors; increase
// shots" if any point has zero errors (censor such points before fitting).
FitResult fit_suppression(const std::vector<RatePoint>& points);

struct BayesRegion {
    uint64_t k = 0;
    uint64_t n = 0;
    double bound = 1000.0;
    double lo = 0.0;
    double hi = 1.0;
};

// Interval of rates whose binomial likelihood is within `bound` of the
// maximum-likelihood rate k/n; endpoints by bisection to 1e-12 absolute.
BayesRegion bayes_region(uint64_t k, uint64_t n, double bound = 1000.0);

// One experiment configuration with its Monte Carlo tally.
struct CellPoint {
    ExperimentSpec spec;
    double pu = 0.0;
    double pm = 0.0;
    uint64_t shots = 0;
    uint64_t errors = 0;
    BayesRegion region;

    double p_logical() const {
        return shots ? static_cast<double>(errors) / static_cast<double>(shots)
                     : 0.0;
    }
    int code_distance() const {
        return spec.kind == ExperimentKind::Stability
                   ? static_cast<int>(spec.rounds)
                   : static_cast<int>(spec.diameter);
    }
};

struct RunOptions {
    int workers = 0;
    bool use_apsp = false;
    double bayes_bound = 1000.0;
    uint64_t slab_shots = 1ull << 16;  // sampling/decoding batch size
};

// Full pipeline for one point: generate, add noise, extract the decoding
// graph, then sample and decode `shots` shots in slabs (streaming, so shot
// counts are bounded by slab memory, not total memory).
CellPoint run_point(const ExperimentSpec& spec, double pu, double pm,
                    uint64_t shots, uint64_t seed,
                    const RunOptions& opt = {});

struct SweepCell {
    double pu = 0.0;
    double pm = 0.0;
    std::vector<CellPoint> points;  // one per spec
    bool censored = true;           // < 2 points with observed errors
    FitResult fit;                  // valid when !censored
};

struct SweepTable {
    std::vector<SweepCell> cells;
};

// Grid sweep: every (pu, pm) cell runs every spec. Each point's seed is
// derived from (seed, cell index, spec index), so results are independent
// of execution order. Points with zero errors are censored from the fit.
SweepTable sweep(const std::vector<std::pair<double, double>>& grid,
                 const std::vector<ExperimentSpec>& specs, uint64_t shots,
                 uint64_t seed, const RunOptions& opt = {});

// Groups points sharing (type, basis, pu, pm) and fits each group across
// its code distances; used by the analyze subcommand.
struct GroupFit {
    ExperimentKind kind = ExperimentKind::Stability;
    Basis basis = Basis::Z;
    double pu = 0.0;
    double pm = 0.0;
    std::vector<CellPoint> points;
    bool censored = true;
    FitResult fit;
};
std::vector<GroupFit> fit_groups(const std::vector<CellPoint>& points);

// CSV with the columns
// type,basis,d,rounds,pu,pm,shots,errors,p_logical,region_lo,region_hi.
void emit_csv(const std::vector<CellPoint>& points, std::ostream& out);
std::vector<CellPoint> read_csv(std::istream& in);

// Log-log scatter of p_L against physical error rate (max of pu, pm) with
// shaded likelihood regions: one polyline + one region polygon per
// (type, basis, d, rounds) group, one circle marker per point. Zero-error
// points are drawn at their region upper bound.
void emit_svg(const std::vector<CellPoint>& points, std::ostream& out);

}  // namespace qec
