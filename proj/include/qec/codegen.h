#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "qec/circuit.h"

namespace qec {

enum class Basis : uint8_t { X, Z };

inline Basis opposite(Basis b) { return b == Basis::X ? Basis::Z : Basis::X; }
inline char basis_char(Basis b) { return b == Basis::X ? 'X' : 'Z'; }

enum class ExperimentKind : uint8_t { Memory, Stability };

inline const char* kind_name(ExperimentKind k) {
    return k == ExperimentKind::Memory ? "memory" : "stability";
}

// basis is the data initialization/measurement basis. For stability
// experiments the patch's single boundary type is the opposite basis, so the
// measured boundary-type stabilizer product is deterministic.
struct ExperimentSpec {
    ExperimentKind kind = ExperimentKind::Stability;
    Basis basis = Basis::Z;
    uint32_t diameter = 4;  // patch is diameter x diameter data qubits
    uint32_t rounds = 1;    // stabilizer measurement rounds
};

// One stabilizer plaquette of the rotated surface code. The cell (px, py)
// is the lower-left data-grid corner; the ancilla sits at the cell center
// (px + 0.5, py + 0.5).
struct Plaquette {
    std::array<int32_t, 2> cell;
    Basis type;
    std::vector<uint32_t> support;  // data qubit ids, ascending (2 or 4)
    uint32_t ancilla;               // ancilla qubit id
};

struct PatchLayout {
    uint32_t diameter = 0;
    // Data qubit id = x * diameter + y (row-major over coordinates).
    std::vector<std::array<int32_t, 2>> data_coords;
    // Ancillas numbered after the data qubits, in (px, py) order.
    std::vector<Plaquette> plaquettes;

    uint32_t num_data() const {
        return static_cast<uint32_t>(data_coords.size());
    }
    uint32_t num_qubits() const {
        return num_data() + static_cast<uint32_t>(plaquettes.size());
    }
};

// Rotated-surface-code patch layout. For stability kind every boundary
// plaquette has the given boundary_type (diameter must be even: on an odd
// patch the corner data qubits cannot sit in two boundary-type plaquettes,
// so the telescoping product would not close). For memory kind the
// boundary_type argument is ignored: X boundaries run along the two
// x-extreme sides and Z boundaries along the two y-extreme sides.
PatchLayout build_layout(ExperimentKind kind, Basis boundary_type, uint32_t d);

// Stability experiment circuit: reset everything, r rounds of the 4-CZ-layer
// schedule, final data measurement in spec.basis. Detectors: basis-type
// plaquettes in the first round, consecutive-round pairs for all plaquettes,
// basis-type data-vs-ancilla closures at the end. Observable 0 = the final
// round's boundary-type plaquette measurements.
Circuit gen_stability(const ExperimentSpec& spec);

// Memory experiment circuit: same round schedule; observable 0 = the logical
// operator of spec.basis read off a boundary line of final data
// measurements (column x=0 for Z, row y=0 for X).
Circuit gen_memory(const ExperimentSpec& spec);

Circuit gen_circuit(const ExperimentSpec& spec);

// Dataset-style filename: "b=Z,d=4,pd=0.001,pm=0.001,r=25,type=stability.stim"
std::string experiment_filename(const ExperimentSpec& spec, double pu,
                                double pm);

}  // namespace qec
