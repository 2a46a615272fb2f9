#pragma once

#include <cstdint>
#include <vector>

#include "qec/circuit.h"
#include "qec/frame_sim.h"
#include "qec/rng.h"

namespace qec {

// Full stabilizer tableau simulator (destabilizer/stabilizer row form with
// bit-packed Pauli words). This is the correctness oracle for the frame
// sampler: it tracks actual measurement outcomes, drawing random bits for
// indeterminate measurements, so it can certify that generated circuits
// have deterministic detectors and that injected Paulis produce the same
// symptoms the frame propagation claims.
class Tableau {
  public:
    explicit Tableau(uint32_t num_qubits);

    uint32_t num_qubits() const { return n_; }

    void h(uint32_t q);
    void cx(uint32_t c, uint32_t t);
    void cz(uint32_t a, uint32_t b);
    void pauli_x(uint32_t q);
    void pauli_z(uint32_t q);

    // Z-basis measurement; indeterminate outcomes consume one bit of `rng`.
    uint8_t measure(uint32_t q, ShotRng& rng);
    // Measure, then flip back to |0>.
    void reset(uint32_t q, ShotRng& rng);

  private:
    bool xbit(uint32_t i, uint32_t q) const;
    bool zbit(uint32_t i, uint32_t q) const;
    // row h := row i * row h, with CHP g-function phase bookkeeping.
    void rowsum(uint32_t h, uint32_t i);

    uint32_t n_;
    uint32_t words_;
    std::vector<uint64_t> x_, z_;  // (2n + 1) rows: destab, stab, scratch
    std::vector<uint8_t> r_;
};

struct DeterminismReport {
    bool ok = false;
    uint64_t trials = 0;
    // Detectors whose parity varied across trials or was nonzero.
    std::vector<uint64_t> bad_detectors;
    // Observables whose parity varied across trials.
    std::vector<uint32_t> bad_observables;
    // The constant observable parities (valid when ok).
    std::vector<uint8_t> observable_values;
};

// Runs `trials` tableau trajectories of a noiseless circuit (flattened
// internally) with distinct outcome streams derived from `seed`, and checks
// that every detector parity is constant and zero and every observable
// parity is constant. Violations are reported, not thrown. Throws only on a
// noisy input.
DeterminismReport verify_determinism(const Circuit& ideal, uint64_t trials,
                                     uint64_t seed);

// Samples detection data through the tableau instead of the Pauli frame,
// reusing the exact per-shot channel event streams of sample_frames. Bits
// are flips relative to the circuit's noiseless trajectory, so the result
// is directly comparable to (and for a correct sampler, identical to)
// sample_frames(cc, shots, seed).
DetectionData tableau_sample(const Circuit& noisy, uint64_t shots, uint64_t seed,
                             uint64_t outcome_seed = 1);

// inject_errors through the tableau: applies the listed effects as physical
// Pauli / record flips and returns the symptom relative to the noiseless
// trajectory.
Symptom tableau_inject(const Circuit& c, const std::vector<ErrorLocation>& errs,
                       uint64_t outcome_seed = 1);

}  // namespace qec
