#include "qec/decoder.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <exception>
#include <limits>
#include <stdexcept>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace qec {

namespace {

constexpr double kUnreached = std::numeric_limits<double>::infinity();

// Fixed-point edge costs for the integer matcher.
int64_t scale_weight(double w) {
    return static_cast<int64_t>(std::llround(w * 4294967296.0));
}

}  // namespace

DistanceOracle::DistanceOracle(const DecodingGraph& g) : g_(g) {
    size_t n = g.num_nodes();
    dist_.assign(n, kUnreached);
    pred_node_.assign(n, -1);
    pred_edge_.assign(n, -1);
    settled_.assign(n, 0);
    is_target_.assign(n, 0);
}

void DistanceOracle::reset() {
    for (uint64_t u : touched_) {
        dist_[u] = kUnreached;
        pred_node_[u] = -1;
        pred_edge_[u] = -1;
        settled_[u] = 0;
    }
    touched_.clear();
    heap_.clear();
}

void DistanceOracle::run(uint64_t src, const std::vector<uint64_t>& targets) {
    reset();
    size_t remaining = 0;
    for (uint64_t t : targets)
        if (!is_target_[t]) {
            is_target_[t] = 1;
            ++remaining;
        }
    bool settle_all = targets.empty();

    auto heap_less = [](const std::pair<double, uint64_t>& a,
                        const std::pair<double, uint64_t>& b) {
        return a > b;  // min-heap on (distance, node id)
    };
    dist_[src] = 0.0;
    touched_.push_back(src);
    heap_.emplace_back(0.0, src);
    while (!heap_.empty()) {
        std::pop_heap(heap_.begin(), heap_.end(), heap_less);
        auto [d, u] = heap_.back();
        heap_.pop_back();
        if (settled_[u]) continue;
        settled_[u] = 1;
        if (!settle_all && is_target_[u] && --remaining == 0) break;
        for (uint64_t k = g_.adj_offsets[u]; k < g_.adj_offsets[u + 1]; ++k) {
            uint32_t eid = g_.adj_edges[k];
            const GraphEdge& e = g_.edges[eid];
            uint64_t v = e.a == u ? e.b : e.a;
            if (settled_[v]) continue;
            double nd = d + e.weight;
            if (nd < dist_[v]) {
                if (dist_[v] == kUnreached) touched_.push_back(v);
                dist_[v] = nd;
                pred_node_[v] = static_cast<int64_t>(u);
                pred_edge_[v] = static_cast<int32_t>(eid);
                heap_.emplace_back(nd, v);
                std::push_heap(heap_.begin(), heap_.end(), heap_less);
            } else if (nd == dist_[v] &&
                       static_cast<int64_t>(u) < pred_node_[v]) {
                // Deterministic tie-break: keep the smallest predecessor.
                pred_node_[v] = static_cast<int64_t>(u);
                pred_edge_[v] = static_cast<int32_t>(eid);
            }
        }
    }
    for (uint64_t t : targets) is_target_[t] = 0;
}

bool DistanceOracle::reached(uint64_t node) const {
    return dist_[node] != kUnreached;
}

double DistanceOracle::dist(uint64_t node) const { return dist_[node]; }

uint32_t DistanceOracle::path_mask(uint64_t node) const {
    if (!reached(node)) throw std::logic_error("path_mask of unreached node");
    uint32_t m = 0;
    uint64_t cur = node;
    while (pred_edge_[cur] >= 0) {
        const GraphEdge& e = g_.edges[pred_edge_[cur]];
        m ^= e.obs_mask;
        cur = static_cast<uint64_t>(pred_node_[cur]);
    }
    return m;
}

std::vector<uint64_t> DistanceOracle::path(uint64_t node) const {
    if (!reached(node)) throw std::logic_error("path of unreached node");
    std::vector<uint64_t> nodes;
    for (uint64_t cur = node;; cur = static_cast<uint64_t>(pred_node_[cur])) {
        nodes.push_back(cur);
        if (pred_node_[cur] < 0) break;
    }
    std::reverse(nodes.begin(), nodes.end());
    return nodes;
}

int32_t DistanceOracle::pred_edge(uint64_t node) const {
    return pred_edge_[node];
}

PathTable all_pairs_distances(const DecodingGraph& g,
                              const std::vector<uint64_t>& sources) {
    for (uint64_t s : sources)
        if (s >= g.num_detectors)
            throw std::invalid_argument("source is not a detector index");
    PathTable table;
    table.sources = sources;
    size_t n = sources.size();
    table.dist.assign(n, std::vector<double>(n + 1, kUnreached));
    table.mask.assign(n, std::vector<uint32_t>(n + 1, 0));
    DistanceOracle oracle(g);
    std::vector<uint64_t> targets;
    for (size_t i = 0; i < n; ++i) {
        targets.clear();
        for (size_t j = 0; j < n; ++j)
            if (j != i) targets.push_back(sources[j]);
        targets.push_back(g.boundary());
        oracle.run(sources[i], targets);
        table.dist[i][i] = 0.0;
        bool any = false;
        for (size_t j = 0; j < n; ++j) {
            if (j == i || !oracle.reached(sources[j])) continue;
            table.dist[i][j] = oracle.dist(sources[j]);
            table.mask[i][j] = oracle.path_mask(sources[j]);
            any = true;
        }
        if (oracle.reached(g.boundary())) {
            table.dist[i][n] = oracle.dist(g.boundary());
            table.mask[i][n] = oracle.path_mask(g.boundary());
            any = true;
        }
        if (!any && !(n == 1 && sources.empty()))
            throw std::runtime_error(
                "detector " + std::to_string(sources[i]) +
                " reaches neither the boundary nor another source");
    }
    return table;
}

ApspTable::ApspTable(const DecodingGraph& g, uint64_t max_nodes) : g_(g) {
    n_ = g.num_nodes();
    if (n_ > max_nodes)
        throw std::invalid_argument(
            "all-pairs table over " + std::to_string(n_) +
            " nodes exceeds the " + std::to_string(max_nodes) +
            "-node limit; use lazy distances");
    dist_.assign(n_ * n_, kUnreached);
    pred_edge_.assign(n_ * n_, -1);
    DistanceOracle oracle(g);
    for (uint64_t src = 0; src < n_; ++src) {
        oracle.run(src, {});
        for (uint64_t v = 0; v < n_; ++v) {
            if (!oracle.reached(v)) continue;
            dist_[src * n_ + v] = oracle.dist(v);
            pred_edge_[src * n_ + v] = oracle.pred_edge(v);
        }
    }
}

double ApspTable::dist(uint64_t u, uint64_t v) const {
    return dist_[u * n_ + v];
}

bool ApspTable::reached(uint64_t u, uint64_t v) const {
    return dist_[u * n_ + v] != kUnreached;
}

uint32_t ApspTable::mask(uint64_t u, uint64_t v) const {
    if (!reached(u, v)) throw std::logic_error("mask of unreached pair");
    uint32_t m = 0;
    for (uint64_t cur = v; cur != u;) {
        int32_t eid = pred_edge_[u * n_ + cur];
        if (eid < 0) throw std::logic_error("broken predecessor chain");
        const GraphEdge& e = g_.edges[eid];
        m ^= e.obs_mask;
        cur = e.a == cur ? e.b : e.a;
    }
    return m;
}

namespace {

// Per-thread decoding state: oracle + matcher + dense pair matrices.
struct ShotDecoder {
    const DecodingGraph& g;
    const ApspTable* apsp;
    DistanceOracle oracle;
    MinWeightMatching matcher;
    std::vector<std::vector<int64_t>> cost;
    std::vector<std::vector<uint32_t>> mask;
    std::vector<std::vector<double>> dist;  // unscaled, for the audit weight
    std::vector<uint64_t> targets;

    ShotDecoder(const DecodingGraph& graph, const ApspTable* table)
        : g(graph), apsp(table), oracle(graph) {}

    ShotMatching decode(const Syndrome& fired) {
        size_t k = fired.size();
        if (k == 0) return {};
        bool odd = k % 2 != 0;
        size_t n = k + (odd ? 1 : 0);
        cost.assign(n, std::vector<int64_t>(n, MinWeightMatching::kForbidden));
        mask.assign(n, std::vector<uint32_t>(n, 0));
        dist.assign(n, std::vector<double>(n, 0.0));
        uint64_t boundary = g.boundary();
        if (apsp) {
            for (size_t i = 0; i < k; ++i) {
                for (size_t j = i + 1; j < k; ++j)
                    if (apsp->reached(fired[i], fired[j])) {
                        double d = apsp->dist(fired[i], fired[j]);
                        cost[i][j] = cost[j][i] = scale_weight(d);
                        dist[i][j] = dist[j][i] = d;
                        mask[i][j] = mask[j][i] = apsp->mask(fired[i], fired[j]);
                    }
                if (odd && apsp->reached(fired[i], boundary)) {
                    double d = apsp->dist(fired[i], boundary);
                    cost[i][k] = cost[k][i] = scale_weight(d);
                    dist[i][k] = dist[k][i] = d;
                    mask[i][k] = mask[k][i] = apsp->mask(fired[i], boundary);
                }
            }
        } else {
            for (size_t i = 0; i < k; ++i) {
                targets.clear();
                for (size_t j = i + 1; j < k; ++j) targets.push_back(fired[j]);
                if (odd) targets.push_back(boundary);
                if (targets.empty()) continue;
                oracle.run(fired[i], targets);
                for (size_t j = i + 1; j < k; ++j)
                    if (oracle.reached(fired[j])) {
                        double d = oracle.dist(fired[j]);
                        cost[i][j] = cost[j][i] = scale_weight(d);
                        dist[i][j] = dist[j][i] = d;
                        mask[i][j] = mask[j][i] = oracle.path_mask(fired[j]);
                    }
                if (odd && oracle.reached(boundary)) {
                    double d = oracle.dist(boundary);
                    cost[i][k] = cost[k][i] = scale_weight(d);
                    dist[i][k] = dist[k][i] = d;
                    mask[i][k] = mask[k][i] = oracle.path_mask(boundary);
                }
            }
        }
        std::vector<int> mate = matcher.solve(cost);
        ShotMatching out;
        for (size_t i = 0; i < n; ++i) {
            if (mate[i] > static_cast<int>(i)) {
                out.prediction.mask ^= mask[i][mate[i]];
                out.weight += dist[i][mate[i]];
            }
        }
        return out;
    }
};

void validate_syndrome(const DecodingGraph& g, const Syndrome& fired) {
    for (size_t i = 0; i < fired.size(); ++i) {
        if (fired[i] >= g.num_detectors)
            throw std::invalid_argument("fired detector index out of range");
        if (i > 0 && fired[i] <= fired[i - 1])
            throw std::invalid_argument(
                "syndrome must be sorted and duplicate-free");
    }
}

}  // namespace

Prediction decode_shot(const DecodingGraph& g, const Syndrome& fired,
                       const ApspTable* apsp) {
    return decode_shot_audit(g, fired, apsp).prediction;
}

ShotMatching decode_shot_audit(const DecodingGraph& g, const Syndrome& fired,
                               const ApspTable* apsp) {
    validate_syndrome(g, fired);
    ShotDecoder dec(g, apsp);
    return dec.decode(fired);
}

DecodeResult decode_batch(const DecodingGraph& g, const DetectionData& data,
                          int workers, const ApspTable* apsp) {
    if (data.num_detectors != g.num_detectors)
        throw std::invalid_argument(
            "detection data width does not match the graph");
    if (data.num_observables > 32)
        throw std::invalid_argument("more than 32 observables unsupported");
    DecodeResult result;
    result.shots = data.shots;
    result.predictions.assign(data.shots, 0);
    uint64_t errors = 0;
    int threads = resolve_workers(workers);
    (void)threads;
    std::exception_ptr failure = nullptr;
#ifdef _OPENMP
#pragma omp parallel num_threads(threads) reduction(+ : errors)
#endif
    {
        ShotDecoder dec(g, apsp);
        Syndrome fired;
#ifdef _OPENMP
#pragma omp for schedule(dynamic, 128)
#endif
        for (int64_t s = 0; s < static_cast<int64_t>(data.shots); ++s) {
            if (failure) continue;
            fired.clear();
            size_t stride = data.det_stride();
            for (size_t w = 0; w < stride; ++w) {
                uint64_t word = data.det_bits[s * stride + w];
                while (word) {
                    uint64_t d = w * 64 + std::countr_zero(word);
                    word &= word - 1;
                    if (d < data.num_detectors) fired.push_back(d);
                }
            }
            try {
                uint32_t prediction = dec.decode(fired).prediction.mask;
                result.predictions[s] = prediction;
                uint32_t actual = 0;
                for (uint32_t o = 0; o < data.num_observables; ++o)
                    actual |= static_cast<uint32_t>(data.obs(s, o)) << o;
                if (prediction != actual) ++errors;
            } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
                {
                    if (!failure) failure = std::current_exception();
                }
            }
        }
    }
    if (failure) std::rethrow_exception(failure);
    result.errors = errors;
    return result;
}

}  // namespace qec
