#pragma once

#include <cstdint>
#include <vector>

#include "qec/blossom.h"
#include "qec/dem.h"
#include "qec/frame_sim.h"

namespace qec {

// Sorted fired detector indices for one shot.
using Syndrome = std::vector<uint64_t>;

struct Prediction {
    uint32_t mask = 0;  // bit o = predicted flip of observable o
    bool obs(uint32_t o) const { return (mask >> o) & 1; }
    bool operator==(const Prediction&) const = default;
};

// Reusable truncated-Dijkstra workspace over the decoding graph. Distances
// are exact; equal-distance ties are broken deterministically (smaller heap
// node id first, smaller predecessor id on equal relaxations) so path masks
// are reproducible.
class DistanceOracle {
  public:
    explicit DistanceOracle(const DecodingGraph& g);

    // Shortest paths from src until all `targets` settle (or the reachable
    // component is exhausted). Pass no targets to settle every node.
    void run(uint64_t src, const std::vector<uint64_t>& targets);

    bool reached(uint64_t node) const;
    double dist(uint64_t node) const;
    // XOR of edge observable masks along the chosen src -> node path.
    uint32_t path_mask(uint64_t node) const;
    // The chosen path, src first; for tests and diagnostics.
    std::vector<uint64_t> path(uint64_t node) const;
    // Edge id into the node from its predecessor (-1 at the source).
    int32_t pred_edge(uint64_t node) const;

  private:
    void reset();

    const DecodingGraph& g_;
    std::vector<double> dist_;
    std::vector<int64_t> pred_node_;
    std::vector<int32_t> pred_edge_;
    std::vector<uint8_t> settled_;
    std::vector<uint8_t> is_target_;
    std::vector<uint64_t> touched_;
    std::vector<std::pair<double, uint64_t>> heap_;
};

// Distance/path-mask table between `sources` and the boundary; column k <
// sources.size() is sources[k], the final column is the boundary node.
// Unreachable entries hold +infinity. Throws if any source reaches neither
// another source nor the boundary.
struct PathTable {
    std::vector<uint64_t> sources;
    std::vector<std::vector<double>> dist;   // sources.size() x (size + 1)
    std::vector<std::vector<uint32_t>> mask;
};
PathTable all_pairs_distances(const DecodingGraph& g,
                              const std::vector<uint64_t>& sources);

// Optional precomputed all-pairs table (the --apsp path): one full Dijkstra
// per node with the same tie-breaking as the lazy oracle, so decoding
// results are identical. Rejected above `max_nodes` (quadratic memory).
class ApspTable {
  public:
    explicit ApspTable(const DecodingGraph& g, uint64_t max_nodes = 4096);

    double dist(uint64_t u, uint64_t v) const;
    bool reached(uint64_t u, uint64_t v) const;
    uint32_t mask(uint64_t u, uint64_t v) const;

  private:
    const DecodingGraph& g_;
    uint64_t n_;
    std::vector<double> dist_;
    std::vector<int32_t> pred_edge_;  // row-major [src * n_ + node]
};

// Exact minimum-weight matching over the fired detectors: nodes may pair
// with each other (shortest path, possibly through the boundary) and, when
// the count is odd, one node pairs with the boundary alone. Equivalent to
// the boundary-twin construction because a pair routed through the boundary
// costs exactly the sum of the two boundary legs.
Prediction decode_shot(const DecodingGraph& g, const Syndrome& fired,
                       const ApspTable* apsp = nullptr);

// decode_shot plus the chosen matching's total path weight, for optimality
// audits against exhaustive pairing enumeration.
struct ShotMatching {
    Prediction prediction;
    double weight = 0.0;
};
ShotMatching decode_shot_audit(const DecodingGraph& g, const Syndrome& fired,
                               const ApspTable* apsp = nullptr);

struct DecodeResult {
    uint64_t shots = 0;
    uint64_t errors = 0;  // shots whose prediction != actual flips
    std::vector<uint32_t> predictions;  // per-shot observable masks
};

// Per-shot decode of a whole detection data set (parallel across shots);
// a shot counts as a logical error iff prediction != actual observable bits.
DecodeResult decode_batch(const DecodingGraph& g, const DetectionData& data,
                          int workers = 0, const ApspTable* apsp = nullptr);

}  // namespace qec
