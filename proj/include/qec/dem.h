#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "qec/circuit.h"
#include "qec/frame_sim.h"

namespace qec {

// One independent error mechanism of the detector error model: the XOR of
// all physical effects that produce this exact symptom.
struct ErrorMechanism {
    double p = 0.0;
    std::vector<uint64_t> detectors;    // sorted, size 1 or 2 in the model
    std::vector<uint32_t> observables;  // sorted
    bool operator==(const ErrorMechanism&) const = default;
};

// Probability that exactly one of two independent sources fires.
inline double xor_probability(double a, double b) {
    return a * (1.0 - b) + b * (1.0 - a);
}

struct DemExtraction {
    // Mechanisms with 1-2 detectors, sorted by (detectors, observables).
    std::vector<ErrorMechanism> mechanisms;
    // Mechanisms flipping an observable but no detector: undecodable error
    // floors, kept for diagnostics rather than silently dropped.
    std::vector<ErrorMechanism> diagnostics;
    // One underlying physical effect per mechanism (same order), usable with
    // inject_errors to re-derive the stored symptom.
    std::vector<ErrorLocation> witnesses;
};

// Splits every channel effect into per-qubit X/Z Pauli components (plus
// measurement flips), propagates each component through the circuit, and
// XOR-accumulates effect probabilities into per-symptom mechanisms. Throws
// if any component touches 3+ detectors (a schedule inconsistency: this
// circuit family must be graphlike under component splitting).
DemExtraction extract_dem_full(const Circuit& noisy);
std::vector<ErrorMechanism> extract_dem(const Circuit& noisy);

struct GraphEdge {
    uint64_t a = 0;
    uint64_t b = 0;  // boundary node id == num_detectors
    double p = 0.0;
    double weight = 0.0;  // ln((1-p)/p)
    uint32_t obs_mask = 0;
};

struct DecodingGraph {
    uint64_t num_detectors = 0;  // boundary node id; nodes are 0..num_detectors
    std::vector<GraphEdge> edges;
    // Node adjacency as CSR over edge ids (each edge listed from both ends).
    std::vector<uint64_t> adj_offsets;
    std::vector<uint32_t> adj_edges;

    uint64_t num_nodes() const { return num_detectors + 1; }
    uint64_t boundary() const { return num_detectors; }
};

// Builds the matching graph: 2-detector mechanisms become internal edges,
// 1-detector mechanisms edges to the boundary node. Parallel mechanisms on
// one node pair are XOR-combined per observable mask before weighting; when
// variants with different masks remain (degenerate corner mechanisms), the
// most probable one keeps the edge, ties to the smallest mask. Rejects
// p >= 0.5 (non-positive weight) and 0-detector input.
DecodingGraph build_graph(const std::vector<ErrorMechanism>& mechs,
                          uint64_t num_detectors);

// `.dem` text: one line per mechanism, `error(<p>) D<i> [D<j>] [L<k>]`,
// probabilities with 12 significant digits.
void write_dem(const std::vector<ErrorMechanism>& mechs, std::ostream& out);
std::vector<ErrorMechanism> read_dem(std::istream& in);

}  // namespace qec
