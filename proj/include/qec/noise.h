#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "qec/circuit.h"

namespace qec {

// Two-parameter circuit noise model: p_u on unitary layers (gates and
// idling), p_m on measure/reset operations.
struct NoiseModel {
    double p_u = 0.0;
    double p_m = 0.0;
    // Idle depolarization also hits qubits sitting out reset/measure layers
    // (any layer is a moment; a qubit not being reset or measured idles).
    // Switchable because published noise models differ on this point.
    bool idle_during_measure_reset = true;
};

enum class ChannelKind : uint8_t { MErr, XErr, ZErr, Dep1, Dep2 };

struct Channel {
    ChannelKind kind;
    double p = 0.0;
    std::vector<uint32_t> targets;  // 1 qubit (2 for Dep2)
};

// One outcome of a channel: a Pauli per target (0=I, 1=X, 2=Y, 3=Z), or a
// measurement-record flip.
struct ChannelEffect {
    std::array<uint8_t, 2> pauli = {0, 0};
    bool measurement_flip = false;

    bool operator==(const ChannelEffect&) const = default;
};

// The full outcome distribution, identity first, then non-identity effects
// in table order (DEP2: second-qubit Pauli varies fastest, IX, IY, IZ, XI,
// ..., ZZ). Probabilities sum to 1.
std::vector<std::pair<ChannelEffect, double>> channel_distribution(
    const Channel& ch);

// Applies the substitution rules: H -> DEP1(p_u) after, CZ -> DEP2(p_u)
// after, R -> XERR(p_m) after, M -> M(p_m) + DEP1(p_m) after, and DEP1(p_u)
// on every declared qubit idling through a gate layer. Zero-probability
// channels are omitted. Rejects circuits that already contain channels.
Circuit apply_noise(const Circuit& c, const NoiseModel& m);

// Inverse of apply_noise's insertion: drops channel instructions and the
// M flip argument, recovering the ideal circuit exactly.
Circuit strip_noise(const Circuit& noisy);

// True if the circuit contains any channel instruction or M with a flip
// probability.
bool has_noise(const Circuit& c);

}  // namespace qec
