#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "qec/codegen.h"
#include "qec/decoder.h"
#include "qec/dem.h"
#include "qec/frame_sim.h"
#include "qec/noise.h"
#include "util.h"

using namespace qec;

namespace {

// A mechanism whose edge lands at exactly the requested weight.
ErrorMechanism mech_with_weight(double w, std::vector<uint64_t> dets,
                                std::vector<uint32_t> obs = {}) {
    return {1.0 / (1.0 + std::exp(w)), std::move(dets), std::move(obs)};
}

DecodingGraph stability_graph(uint32_t d, uint32_t r, double pu, double pm,
                              uint64_t* num_detectors = nullptr) {
    ExperimentSpec spec{ExperimentKind::Stability, Basis::Z, d, r};
    Circuit ideal = gen_circuit(spec);
    Circuit noisy = flatten(apply_noise(ideal, {pu, pm, true}));
    uint64_t nd = flatten(ideal).num_detectors();
    if (num_detectors) *num_detectors = nd;
    return build_graph(extract_dem(noisy), nd);
}

// Exhaustive minimum pairing cost over fired nodes: every node may match a
// peer (at PathTable distance) or the boundary, any number of boundary
// matches allowed. Small inputs only.
double exhaustive_min(const PathTable& t, std::vector<int>& alive) {
    size_t first = alive.size();
    for (size_t i = 0; i < alive.size(); ++i) {
        if (alive[i]) {
            first = i;
            break;
        }
    }
    if (first == alive.size()) return 0.0;
    alive[first] = 0;
    size_t bcol = t.sources.size();
    double best = std::numeric_limits<double>::infinity();
    if (t.dist[first][bcol] < best) {
        best = t.dist[first][bcol] + exhaustive_min(t, alive);
    }
    for (size_t j = first + 1; j < alive.size(); ++j) {
        if (!alive[j]) continue;
        alive[j] = 0;
        double d = t.dist[first][j];
        if (d < std::numeric_limits<double>::infinity()) {
            best = std::min(best, d + exhaustive_min(t, alive));
        }
        alive[j] = 1;
    }
    alive[first] = 1;
    return best;
}

double exhaustive_min(const DecodingGraph& g, const Syndrome& fired) {
    PathTable t = all_pairs_distances(g, fired);
    std::vector<int> alive(fired.size(), 1);
    return exhaustive_min(t, alive);
}

}  // namespace

TEST_CASE("single edge distance") {
    DecodingGraph g = build_graph({{0.001, {3, 7}, {}}}, 10);
    PathTable t = all_pairs_distances(g, {3, 7});
    CHECK(t.dist[0][1] == doctest::Approx(std::log(999.0)).epsilon(1e-15));
    CHECK(t.dist[1][0] == t.dist[0][1]);
    CHECK(t.dist[0][0] == 0.0);
    // No boundary edges exist: the boundary column is unreachable.
    CHECK(t.dist[0][2] == std::numeric_limits<double>::infinity());
}

TEST_CASE("path distances and masks compose along chains") {
    std::vector<ErrorMechanism> mechs{
        mech_with_weight(1.0, {3, 7}, {0}),
        mech_with_weight(2.0, {7, 9}, {1}),
    };
    DecodingGraph g = build_graph(mechs, 10);
    PathTable t = all_pairs_distances(g, {3, 9});
    CHECK(t.dist[0][1] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(t.mask[0][1] == 0b11);
}

TEST_CASE("time-like chains cost k single-round flip edges") {
    ExperimentSpec spec{ExperimentKind::Stability, Basis::Z, 4, 5};
    Circuit flat_ideal = flatten(gen_circuit(spec));
    DecodingGraph g = stability_graph(4, 5, 0.001, 0.003);

    // Locate the detectors of one interior plaquette three rounds running.
    auto coords = flat_ideal.detector_coords();
    std::vector<uint64_t> det;
    for (double tcoord : {1.0, 2.0, 3.0}) {
        for (size_t k = 0; k < coords.size(); ++k) {
            if (coords[k][0] == 1.5 && coords[k][1] == 1.5 &&
                coords[k][2] == tcoord) {
                det.push_back(k);
            }
        }
    }
    REQUIRE(det.size() == 3);

    auto edge_weight = [&](uint64_t a, uint64_t b) {
        for (const GraphEdge& e : g.edges) {
            if (e.a == std::min(a, b) && e.b == std::max(a, b)) return e.weight;
        }
        REQUIRE(false);
        return 0.0;
    };
    double w01 = edge_weight(det[0], det[1]);
    double w12 = edge_weight(det[1], det[2]);

    PathTable t = all_pairs_distances(g, det);
    CHECK(t.dist[0][1] == doctest::Approx(w01).epsilon(1e-12));
    CHECK(t.dist[1][2] == doctest::Approx(w12).epsilon(1e-12));
    // Measurement flips dominate at p_m > p_u, so the two-round chain is the
    // shortest path and its cost is exactly the sum of the per-round edges.
    CHECK(t.dist[0][2] == doctest::Approx(w01 + w12).epsilon(1e-12));
}

TEST_CASE("empty syndrome decodes to no flips") {
    DecodingGraph g = build_graph({{0.001, {0}, {0}}}, 2);
    CHECK(decode_shot(g, {}) == Prediction{});
    ShotMatching m = decode_shot_audit(g, {});
    CHECK(m.weight == 0.0);
}

TEST_CASE("single-mechanism syndromes decode to that mechanism's flips") {
    DecodingGraph g = stability_graph(4, 5, 0.001, 0.001);
    std::mt19937_64 rng(77);
    int checked = 0;
    while (checked < 50) {
        const GraphEdge& e = g.edges[rng() % g.edges.size()];
        Syndrome fired;
        fired.push_back(e.a);
        if (e.b != g.boundary()) fired.push_back(e.b);
        Prediction p = decode_shot(g, fired);
        CHECK(p.mask == e.obs_mask);
        ++checked;
    }
}

TEST_CASE("matched weight equals the exhaustive pairing optimum") {
    uint64_t nd = 0;
    DecodingGraph g = stability_graph(2, 3, 0.002, 0.002, &nd);
    std::mt19937_64 rng(4242);
    for (int trial = 0; trial < 200; ++trial) {
        size_t k = 1 + rng() % 8;
        std::vector<uint64_t> all(nd);
        for (uint64_t i = 0; i < nd; ++i) all[i] = i;
        std::shuffle(all.begin(), all.end(), rng);
        Syndrome fired(all.begin(), all.begin() + std::min<size_t>(k, nd));
        std::sort(fired.begin(), fired.end());
        ShotMatching got = decode_shot_audit(g, fired);
        double want = exhaustive_min(g, fired);
        CHECK(got.weight == doctest::Approx(want).epsilon(1e-9));
    }
}

TEST_CASE("optimality holds on the larger graph too") {
    uint64_t nd = 0;
    DecodingGraph g = stability_graph(4, 5, 0.001, 0.001, &nd);
    std::mt19937_64 rng(5150);
    for (int trial = 0; trial < 50; ++trial) {
        size_t k = 2 + rng() % 5;
        std::vector<uint64_t> all(nd);
        for (uint64_t i = 0; i < nd; ++i) all[i] = i;
        std::shuffle(all.begin(), all.end(), rng);
        Syndrome fired(all.begin(), all.begin() + k);
        std::sort(fired.begin(), fired.end());
        ShotMatching got = decode_shot_audit(g, fired);
        double want = exhaustive_min(g, fired);
        CHECK(got.weight == doctest::Approx(want).epsilon(1e-9));
    }
}

TEST_CASE("pairs route through the boundary when that is cheaper") {
    std::vector<ErrorMechanism> mechs{
        mech_with_weight(1.0, {0}, {0}),
        mech_with_weight(1.0, {1}, {1}),
        mech_with_weight(10.0, {0, 1}, {}),
    };
    DecodingGraph g = build_graph(mechs, 2);
    ShotMatching m = decode_shot_audit(g, {0, 1});
    CHECK(m.weight == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(m.prediction.mask == 0b11);
}

TEST_CASE("odd syndromes send one node to the boundary") {
    std::vector<ErrorMechanism> mechs{
        mech_with_weight(5.0, {0}, {0}),
        mech_with_weight(1.0, {0, 1}, {1}),
        mech_with_weight(2.0, {1}, {}),
    };
    DecodingGraph g = build_graph(mechs, 2);
    ShotMatching m = decode_shot_audit(g, {0});
    // Node 0 to boundary: direct costs 5, hopping through node 1 costs
    // 1 + 2 = 3, so the prediction carries the cheap route's flips.
    CHECK(m.weight == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(m.prediction.mask == 0b10);
}

TEST_CASE("unreachable syndromes are an error, not a guess") {
    DecodingGraph g = build_graph({{0.01, {0, 1}, {}}}, 3);
    // Detector 2 has no edges at all.
    CHECK(!error_of([&] { decode_shot(g, {2}); }).empty());
    CHECK(!error_of([&] { all_pairs_distances(g, {2}); }).empty());
    // Node 0 can reach its peer even though neither reaches the boundary.
    CHECK(decode_shot(g, {0, 1}) == Prediction{});
    // But alone it cannot close parity.
    CHECK(!error_of([&] { decode_shot(g, {0}); }).empty());
}

TEST_CASE("syndromes must be sorted, unique, in range") {
    DecodingGraph g = build_graph({{0.01, {0}, {}}, {0.01, {1}, {}}}, 2);
    CHECK(!error_of([&] { decode_shot(g, {1, 0}); }).empty());
    CHECK(!error_of([&] { decode_shot(g, {0, 0}); }).empty());
    CHECK(!error_of([&] { decode_shot(g, {5}); }).empty());
}

TEST_CASE("relabeling detectors permutes nothing observable") {
    // Weights are chosen so every matching optimum is unique; with ties the
    // two labelings could legitimately return different equal-weight flips.
    std::vector<ErrorMechanism> mechs{
        mech_with_weight(1.5, {0, 1}, {0}),
        mech_with_weight(2.5, {1, 2}, {}),
        mech_with_weight(0.6, {2}, {1}),
        mech_with_weight(3.3, {0}, {}),
        mech_with_weight(2.0, {0, 3}, {1}),
        mech_with_weight(1.1, {3}, {}),
    };
    DecodingGraph g = build_graph(mechs, 4);
    // Relabel i -> 3 - i.
    std::vector<ErrorMechanism> relabeled;
    for (ErrorMechanism m : mechs) {
        for (uint64_t& d : m.detectors) d = 3 - d;
        std::sort(m.detectors.begin(), m.detectors.end());
        relabeled.push_back(std::move(m));
    }
    DecodingGraph g2 = build_graph(relabeled, 4);
    for (Syndrome fired :
         {Syndrome{0}, Syndrome{0, 2}, Syndrome{1, 3}, Syndrome{0, 1, 2, 3}}) {
        Syndrome mapped;
        for (uint64_t d : fired) mapped.push_back(3 - d);
        std::sort(mapped.begin(), mapped.end());
        ShotMatching a = decode_shot_audit(g, fired);
        ShotMatching b = decode_shot_audit(g2, mapped);
        CHECK(a.weight == doctest::Approx(b.weight).epsilon(1e-12));
        CHECK(a.prediction == b.prediction);
    }
}

TEST_CASE("precomputed distance tables decode identically") {
    ExperimentSpec spec{ExperimentKind::Memory, Basis::Z, 3, 2};
    Circuit noisy = flatten(apply_noise(gen_circuit(spec), {0.02, 0.01, true}));
    CompiledCircuit cc = compile_circuit(noisy);
    DecodingGraph g = build_graph(extract_dem(noisy), cc.num_detectors);
    ApspTable apsp(g);
    DetectionData data = sample_frames(cc, 500, 13, 2);
    DecodeResult plain = decode_batch(g, data, 2);
    DecodeResult fast = decode_batch(g, data, 2, &apsp);
    CHECK(plain.shots == fast.shots);
    CHECK(plain.errors == fast.errors);
    CHECK(plain.predictions == fast.predictions);
    // Spot-check single shots as well.
    ShotMatching a = decode_shot_audit(g, {0, 5});
    ShotMatching b = decode_shot_audit(g, {0, 5}, &apsp);
    CHECK(a.weight == doctest::Approx(b.weight).epsilon(1e-12));
    CHECK(a.prediction == b.prediction);
}

TEST_CASE("distance table size limit") {
    DecodingGraph g = build_graph({{0.01, {0, 1}, {}}, {0.01, {1, 2}, {}},
                                   {0.01, {2, 3}, {}}, {0.01, {3}, {}}},
                                  4);
    CHECK(!error_of([&] { ApspTable(g, 3); }).empty());
    ApspTable ok(g, 5);
    CHECK(ok.dist(0, 3) ==
          doctest::Approx(3 * std::log(99.0)).epsilon(1e-12));
}

TEST_CASE("batch decoding tallies logical errors") {
    std::vector<ErrorMechanism> mechs{
        mech_with_weight(1.0, {0, 1}, {0}),
        mech_with_weight(1.0, {0}, {}),
        mech_with_weight(1.0, {1}, {}),
    };
    DecodingGraph g = build_graph(mechs, 2);

    DetectionData data;
    data.num_detectors = 2;
    data.num_observables = 1;
    // Shot 0: nothing happened. Shot 1: the {0,1} mechanism fired and
    // flipped the observable (decodable: the pair edge at weight 1 beats the
    // two boundary legs at weight 2). Shot 2: a silent logical flip -- no
    // detections, flipped frame -- which no decoder can catch.
    data.shots = 3;
    data.det_bits = {0b00, 0b11, 0b00};
    data.obs_bits = {0, 1, 1};
    DecodeResult res = decode_batch(g, data, 1);
    CHECK(res.shots == 3);
    CHECK(res.predictions[0] == 0);
    CHECK(res.predictions[1] == 1);
    CHECK(res.predictions[2] == 0);
    CHECK(res.errors == 1);  // only the silent flip is missed
}

TEST_CASE("zero-noise batches decode with zero errors") {
    ExperimentSpec spec{ExperimentKind::Stability, Basis::Z, 4, 3};
    Circuit ideal = flatten(gen_circuit(spec));
    CompiledCircuit cc = compile_circuit(ideal);
    // The graph still needs mechanisms; take them from a noisy sibling.
    Circuit noisy = flatten(apply_noise(gen_circuit(spec), {0.001, 0.001, true}));
    DecodingGraph g = build_graph(extract_dem(noisy), cc.num_detectors);
    DetectionData data = sample_frames(cc, 256, 3, 2);
    DecodeResult res = decode_batch(g, data, 2);
    CHECK(res.errors == 0);
}

TEST_CASE("single-mechanism shots decode with zero errors") {
    ExperimentSpec spec{ExperimentKind::Memory, Basis::Z, 3, 2};
    Circuit noisy = flatten(apply_noise(gen_circuit(spec), {0.01, 0.01, true}));
    CompiledCircuit cc = compile_circuit(noisy);
    DecodingGraph g = build_graph(extract_dem(noisy), cc.num_detectors);

    DetectionData data;
    data.num_detectors = cc.num_detectors;
    data.num_observables = cc.num_observables;
    for (const GraphEdge& e : g.edges) {
        uint64_t word = 1ull << e.a;
        if (e.b != g.boundary()) word |= 1ull << e.b;
        data.det_bits.push_back(word);
        data.obs_bits.push_back(e.obs_mask);
        data.shots++;
    }
    REQUIRE(cc.num_detectors <= 64);
    DecodeResult res = decode_batch(g, data, 2);
    CHECK(res.errors == 0);
}

TEST_CASE("batch decoding is worker-count invariant") {
    ExperimentSpec spec{ExperimentKind::Memory, Basis::Z, 3, 2};
    Circuit noisy = flatten(apply_noise(gen_circuit(spec), {0.02, 0.01, true}));
    CompiledCircuit cc = compile_circuit(noisy);
    DecodingGraph g = build_graph(extract_dem(noisy), cc.num_detectors);
    DetectionData data = sample_frames(cc, 300, 17, 2);
    DecodeResult one = decode_batch(g, data, 1);
    DecodeResult four = decode_batch(g, data, 4);
    CHECK(one.errors == four.errors);
    CHECK(one.predictions == four.predictions);
}

TEST_CASE("batch width mismatches are rejected") {
    DecodingGraph g = build_graph({{0.01, {0}, {}}}, 1);
    DetectionData data;
    data.shots = 1;
    data.num_detectors = 2;
    data.num_observables = 1;
    data.det_bits = {0};
    data.obs_bits = {0};
    CHECK(contains(error_of([&] { decode_batch(g, data, 1); }), "width"));
}
