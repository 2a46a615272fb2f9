#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdint>
#include <vector>

#include "qec/codegen.h"
#include "qec/frame_sim.h"
#include "qec/noise.h"
#include "qec/tableau.h"
#include "util.h"

using namespace qec;

namespace {

std::vector<ErrorLocation> channel_locations(const Circuit& flat) {
    std::vector<ErrorLocation> locs;
    for (size_t i = 0; i < flat.instructions.size(); ++i) {
        const Instruction& ins = flat.instructions[i];
        switch (ins.kind) {
            case InstrKind::Depolarize1:
                for (uint32_t s = 0; s < ins.targets.size(); ++s) {
                    for (uint8_t e = 1; e <= 3; ++e) locs.push_back({i, s, e});
                }
                break;
            case InstrKind::Depolarize2:
                for (uint32_t s = 0; s < ins.targets.size() / 2; ++s) {
                    for (uint8_t e = 1; e <= 15; ++e) locs.push_back({i, s, e});
                }
                break;
            case InstrKind::XError:
                for (uint32_t s = 0; s < ins.targets.size(); ++s) {
                    locs.push_back({i, s, 1});
                }
                break;
            case InstrKind::ZError:
                for (uint32_t s = 0; s < ins.targets.size(); ++s) {
                    locs.push_back({i, s, 3});
                }
                break;
            case InstrKind::M:
                for (uint32_t s = 0; s < ins.targets.size(); ++s) {
                    locs.push_back({i, s, 1});
                }
                break;
            default:
                break;
        }
    }
    return locs;
}

}  // namespace

TEST_CASE("tableau reproduces basic stabilizer facts") {
    // |0> measures 0 deterministically; H|0> measures randomly; HH|0> = |0>.
    {
        ShotRng rng(1, 0);
        Tableau t(1);
        CHECK(t.measure(0, rng) == 0);
        t.h(0);
        t.h(0);
        CHECK(t.measure(0, rng) == 0);
    }
    // Bell pair: outcomes are random but perfectly correlated.
    bool saw_zero = false, saw_one = false;
    for (uint64_t s = 0; s < 50; ++s) {
        ShotRng rng(2, s);
        Tableau t(2);
        t.h(0);
        t.cx(0, 1);
        uint8_t a = t.measure(0, rng);
        uint8_t b = t.measure(1, rng);
        CHECK(a == b);
        (a ? saw_one : saw_zero) = true;
    }
    CHECK(saw_zero);
    CHECK(saw_one);
    // CZ in the Hadamard frame acts like CX: X on the control propagates to
    // the target.
    {
        ShotRng rng(3, 0);
        Tableau t(2);
        t.pauli_x(0);
        t.h(1);
        t.cz(0, 1);
        t.h(1);
        CHECK(t.measure(1, rng) == 1);
        CHECK(t.measure(0, rng) == 1);
    }
    // reset returns a randomized qubit to |0>.
    {
        ShotRng rng(4, 0);
        Tableau t(1);
        t.h(0);
        t.reset(0, rng);
        CHECK(t.measure(0, rng) == 0);
    }
}

TEST_CASE("reference circuit is deterministic under the tableau oracle") {
    Circuit c = parse_circuit(read_text_file(golden_path()));
    DeterminismReport rep = verify_determinism(c, 20, 99);
    CHECK(rep.ok);
    CHECK(rep.trials == 20);
    CHECK(rep.bad_detectors.empty());
    CHECK(rep.bad_observables.empty());
    CHECK(rep.observable_values == std::vector<uint8_t>{0});
}

TEST_CASE("generated circuits are deterministic under the tableau oracle") {
    for (ExperimentSpec spec :
         {ExperimentSpec{ExperimentKind::Memory, Basis::Z, 3, 2},
          ExperimentSpec{ExperimentKind::Memory, Basis::X, 3, 2},
          ExperimentSpec{ExperimentKind::Memory, Basis::Z, 2, 1},
          ExperimentSpec{ExperimentKind::Stability, Basis::X, 2, 2},
          ExperimentSpec{ExperimentKind::Stability, Basis::Z, 4, 1}}) {
        DeterminismReport rep = verify_determinism(gen_circuit(spec), 20, 7);
        CHECK(rep.ok);
        CHECK(rep.bad_detectors.empty());
        CHECK(rep.observable_values == std::vector<uint8_t>{0});
    }
}

TEST_CASE("nondeterministic detectors are reported, not hidden") {
    // Measuring X of a freshly reset qubit is a coin flip; a detector on it
    // is a codegen bug that the validator must localize.
    Circuit c = parse_circuit(
        "R 0\nTICK\nH 0\nTICK\nM 0\nDETECTOR rec[-1]\n"
        "OBSERVABLE_INCLUDE(0) rec[-1]\n");
    DeterminismReport rep = verify_determinism(c, 50, 3);
    CHECK(!rep.ok);
    CHECK(rep.bad_detectors == std::vector<uint64_t>{0});
    CHECK(rep.bad_observables == std::vector<uint32_t>{0});
}

TEST_CASE("correlated random outcomes make a deterministic pair detector") {
    // Each outcome alone is a coin flip, but repeating the measurement gives
    // an equal result, so the pair parity is constant zero...
    Circuit good = parse_circuit(
        "R 0\nTICK\nH 0\nTICK\nM 0\nM 0\nDETECTOR rec[-2] rec[-1]\n");
    CHECK(verify_determinism(good, 50, 3).ok);
    // ...while a detector on either single outcome varies across trials.
    Circuit bad = parse_circuit(
        "R 0\nTICK\nH 0\nTICK\nM 0\nM 0\nDETECTOR rec[-1]\n"
        "DETECTOR rec[-2] rec[-1]\n");
    DeterminismReport rep = verify_determinism(bad, 50, 3);
    CHECK(!rep.ok);
    CHECK(rep.bad_detectors == std::vector<uint64_t>{0});
}

TEST_CASE("determinism validation rejects noisy circuits") {
    Circuit noisy = apply_noise(
        gen_circuit({ExperimentKind::Memory, Basis::Z, 3, 2}), {0.001, 0.001, true});
    CHECK(!error_of([&] { verify_determinism(noisy, 5, 1); }).empty());
}

TEST_CASE("tableau sampling equals frame sampling bit for bit") {
    Circuit stab = flatten(apply_noise(
        gen_circuit({ExperimentKind::Stability, Basis::Z, 4, 5}),
        {0.001, 0.001, true}));
    CompiledCircuit scc = compile_circuit(stab);
    CHECK(tableau_sample(stab, 64, 21) == sample_frames(scc, 64, 21, 1));

    Circuit mem = flatten(apply_noise(
        gen_circuit({ExperimentKind::Memory, Basis::Z, 3, 2}), {0.02, 0.01, true}));
    CompiledCircuit mcc = compile_circuit(mem);
    CHECK(tableau_sample(mem, 256, 8) == sample_frames(mcc, 256, 8, 2));
}

TEST_CASE("every single effect's symptom matches the tableau") {
    Circuit flat = flatten(apply_noise(
        gen_circuit({ExperimentKind::Stability, Basis::X, 2, 2}),
        {0.001, 0.001, true}));
    CompiledCircuit cc = compile_circuit(flat);
    std::vector<ErrorLocation> locs = channel_locations(flat);
    REQUIRE(locs.size() > 100);
    for (const ErrorLocation& loc : locs) {
        CAPTURE(loc.instruction);
        CAPTURE(loc.slot);
        CAPTURE(int(loc.effect));
        CHECK(tableau_inject(flat, {loc}) == inject_errors(cc, {loc}));
    }
}

TEST_CASE("multi-effect injections also agree with the tableau") {
    Circuit flat = flatten(apply_noise(
        gen_circuit({ExperimentKind::Memory, Basis::X, 2, 2}), {0.01, 0.01, true}));
    CompiledCircuit cc = compile_circuit(flat);
    std::vector<ErrorLocation> locs = channel_locations(flat);
    REQUIRE(locs.size() >= 6);
    for (size_t i = 0; i + 3 < locs.size(); i += 3) {
        std::vector<ErrorLocation> errs{locs[i], locs[i + 1], locs[i + 3]};
        CHECK(tableau_inject(flat, errs) == inject_errors(cc, errs));
    }
}
