#include "qec/codegen.h"

#include <algorithm>
#include <optional>
#include <stdexcept>

#include "qec/fmt.h"

namespace qec {

namespace {

// Data-qubit corner offsets touched by a plaquette in CZ layers 1..4. The
// two types interleave their middle layers in opposite order; this is what
// orients hook errors perpendicular to the logical operator they threaten.
constexpr std::array<std::array<int32_t, 2>, 4> kOffsetsX = {
    {{0, 0}, {1, 0}, {0, 1}, {1, 1}}};
constexpr std::array<std::array<int32_t, 2>, 4> kOffsetsZ = {
    {{0, 0}, {0, 1}, {1, 0}, {1, 1}}};

const std::array<int32_t, 2>& layer_offset(Basis type, int layer) {
    return type == Basis::X ? kOffsetsX[layer] : kOffsetsZ[layer];
}

// Precomputed per-round schedule pieces shared by all rounds.
struct Schedule {
    const PatchLayout& layout;
    Basis basis;
    uint32_t num_data;
    uint32_t num_anc;
    uint32_t num_qubits;
    // CZ (data, ancilla) pairs per layer, in ancilla order.
    std::array<std::vector<std::pair<uint32_t, uint32_t>>, 4> cz_pairs;
    // Frame each data qubit must hold during each CZ layer: the engaged
    // plaquette's type, or the X resting frame when idle. H layers toggle
    // exactly the qubits whose frame changes across that layer boundary.
    std::array<std::vector<Basis>, 4> frame;

    Schedule(const PatchLayout& l, Basis b)
        : layout(l),
          basis(b),
          num_data(l.num_data()),
          num_anc(static_cast<uint32_t>(l.plaquettes.size())),
          num_qubits(l.num_qubits()) {
        for (auto& f : frame) f.assign(num_data, Basis::X);
        uint32_t d = l.diameter;
        for (const Plaquette& p : l.plaquettes) {
            for (int layer = 0; layer < 4; ++layer) {
                const auto& off = layer_offset(p.type, layer);
                int32_t x = p.cell[0] + off[0];
                int32_t y = p.cell[1] + off[1];
                if (x < 0 || y < 0 || x >= static_cast<int32_t>(d) ||
                    y >= static_cast<int32_t>(d)) {
                    continue;
                }
                uint32_t q = static_cast<uint32_t>(x) * d +
                             static_cast<uint32_t>(y);
                cz_pairs[layer].emplace_back(q, p.ancilla);
                frame[layer][q] = p.type;
            }
        }
    }

    // Frame held by data qubit q between CZ layers; boundary 0 is the round
    // start, boundary 4 the round end.
    Basis frame_at(int boundary, uint32_t q, bool first, bool final_) const {
        if (boundary <= 0) return first ? basis : Basis::X;
        if (boundary >= 5) return final_ ? basis : Basis::X;
        return frame[boundary - 1][q];
    }
};

void push_tick(Circuit& c) {
    c.instructions.push_back({InstrKind::Tick, {}, {}, {}});
}

std::array<double, 2> plaquette_center(const Plaquette& p) {
    return {p.cell[0] + 0.5, p.cell[1] + 0.5};
}

// One full stabilizer measurement round, appended to `out`. First rounds
// reset every qubit and start from the initialization frame; final rounds
// fold the data measurement into the ancilla measurement and end in the
// measurement frame.
void emit_round(std::vector<Instruction>& out, const Schedule& s, bool first,
                bool final_) {
    Circuit c;  // scratch holder so push_tick can be reused
    auto& ins = c.instructions;

    Instruction reset{InstrKind::R, {}, {}, {}};
    uint32_t reset_from = first ? 0 : s.num_data;
    for (uint32_t q = reset_from; q < s.num_qubits; ++q) {
        reset.targets.push_back(Target::qubit(q));
    }
    ins.push_back(std::move(reset));
    push_tick(c);

    for (int boundary = 1; boundary <= 5; ++boundary) {
        Instruction h{InstrKind::H, {}, {}, {}};
        for (uint32_t q = 0; q < s.num_data; ++q) {
            if (s.frame_at(boundary - 1, q, first, final_) !=
                s.frame_at(boundary, q, first, final_)) {
                h.targets.push_back(Target::qubit(q));
            }
        }
        if (boundary == 1 || boundary == 5) {
            // Ancillas are prepared and measured through H every round.
            for (uint32_t a = s.num_data; a < s.num_qubits; ++a) {
                h.targets.push_back(Target::qubit(a));
            }
        }
        if (!h.targets.empty()) ins.push_back(std::move(h));
        push_tick(c);

        if (boundary <= 4) {
            Instruction cz{InstrKind::CZ, {}, {}, {}};
            for (const auto& [dq, aq] : s.cz_pairs[boundary - 1]) {
                cz.targets.push_back(Target::qubit(dq));
                cz.targets.push_back(Target::qubit(aq));
            }
            if (!cz.targets.empty()) ins.push_back(std::move(cz));
            push_tick(c);
        }
    }

    Instruction meas{InstrKind::M, {}, {}, {}};
    uint32_t meas_from = final_ ? 0 : s.num_data;
    for (uint32_t q = meas_from; q < s.num_qubits; ++q) {
        meas.targets.push_back(Target::qubit(q));
    }
    ins.push_back(std::move(meas));

    // Lookback to this round's record of the plaquette at ancilla position
    // p is (num_anc - p) whether or not the data records precede them.
    auto this_round_rec = [&](uint32_t pos) { return s.num_anc - pos; };
    uint32_t prev_round_span = final_ ? s.num_qubits : s.num_anc;

    const auto& plaqs = s.layout.plaquettes;
    if (first) {
        // Only basis-type plaquettes are deterministic after initialization.
        for (uint32_t p = 0; p < plaqs.size(); ++p) {
            if (plaqs[p].type != s.basis) continue;
            auto [cx, cy] = plaquette_center(plaqs[p]);
            Instruction det{InstrKind::Detector, {cx, cy, 0.0}, {}, {}};
            det.targets.push_back(Target::rec(this_round_rec(p)));
            ins.push_back(std::move(det));
        }
    } else {
        for (uint32_t p = 0; p < plaqs.size(); ++p) {
            auto [cx, cy] = plaquette_center(plaqs[p]);
            Instruction det{InstrKind::Detector, {cx, cy, 0.0}, {}, {}};
            det.targets.push_back(
                Target::rec(this_round_rec(p) + prev_round_span));
            det.targets.push_back(Target::rec(this_round_rec(p)));
            ins.push_back(std::move(det));
        }
    }
    ins.push_back({InstrKind::ShiftCoords, {0.0, 0.0, 1.0}, {}, {}});

    if (final_) {
        // Data-vs-ancilla closure: the basis-type plaquette parity read from
        // the data measurements must match the last ancilla measurement.
        for (const Plaquette& p : plaqs) {
            if (p.type != s.basis) continue;
            auto [cx, cy] = plaquette_center(p);
            Instruction det{InstrKind::Detector, {cx, cy, 0.0}, {}, {}};
            for (uint32_t q : p.support) {
                det.targets.push_back(Target::rec(s.num_qubits - q));
            }
            det.targets.push_back(Target::rec(s.num_qubits - p.ancilla));
            ins.push_back(std::move(det));
        }
    } else {
        push_tick(c);
    }

    out.insert(out.end(), std::make_move_iterator(ins.begin()),
               std::make_move_iterator(ins.end()));
}

Circuit gen_experiment(const ExperimentSpec& spec) {
    if (spec.rounds < 1) {
        throw std::invalid_argument("rounds must be >= 1");
    }
    PatchLayout layout =
        build_layout(spec.kind, opposite(spec.basis), spec.diameter);
    Schedule s(layout, spec.basis);

    Circuit c;
    for (uint32_t q = 0; q < s.num_data; ++q) {
        c.instructions.push_back(
            {InstrKind::QubitCoords,
             {static_cast<double>(layout.data_coords[q][0]),
              static_cast<double>(layout.data_coords[q][1])},
             {Target::qubit(q)},
             {}});
    }
    for (const Plaquette& p : layout.plaquettes) {
        auto [cx, cy] = plaquette_center(p);
        c.instructions.push_back({InstrKind::QubitCoords,
                                  {cx, cy},
                                  {Target::qubit(p.ancilla)},
                                  {}});
    }

    uint32_t r = spec.rounds;
    emit_round(c.instructions, s, /*first=*/true, /*final=*/r == 1);
    if (r >= 3) {
        Instruction rep{InstrKind::Repeat, {static_cast<double>(r - 2)}, {}, {}};
        emit_round(rep.body, s, false, false);
        c.instructions.push_back(std::move(rep));
    }
    if (r >= 2) {
        emit_round(c.instructions, s, false, /*final=*/true);
    }

    // Observable 0: boundary-type ancilla measurements of the final round
    // for stability, the logical operator's data measurements for memory.
    Instruction obs{InstrKind::ObservableInclude, {0.0}, {}, {}};
    if (spec.kind == ExperimentKind::Stability) {
        for (const Plaquette& p : layout.plaquettes) {
            if (p.type == s.basis) continue;
            obs.targets.push_back(Target::rec(s.num_qubits - p.ancilla));
        }
    } else {
        uint32_t d = spec.diameter;
        for (uint32_t i = 0; i < d; ++i) {
            // Z logical runs along column x=0, X logical along row y=0.
            uint32_t q = spec.basis == Basis::Z ? i : i * d;
            obs.targets.push_back(Target::rec(s.num_qubits - q));
        }
    }
    c.instructions.push_back(std::move(obs));
    return c;
}

}  // namespace

PatchLayout build_layout(ExperimentKind kind, Basis boundary_type,
                         uint32_t d) {
    if (d < 2) throw std::invalid_argument("patch diameter must be >= 2");
    if (kind == ExperimentKind::Stability && d % 2 != 0) {
        throw std::invalid_argument(
            "stability patches require an even diameter: with an odd one the "
            "corner data qubits sit in only one boundary-type plaquette, so "
            "the global stabilizer product cannot telescope");
    }
    PatchLayout layout;
    layout.diameter = d;
    for (uint32_t x = 0; x < d; ++x) {
        for (uint32_t y = 0; y < d; ++y) {
            layout.data_coords.push_back(
                {static_cast<int32_t>(x), static_cast<int32_t>(y)});
        }
    }

    int32_t dim = static_cast<int32_t>(d);
    uint32_t next_anc = d * d;
    for (int32_t px = -1; px < dim; ++px) {
        for (int32_t py = -1; py < dim; ++py) {
            int in_x = (px >= 0 && px < dim ? 1 : 0) +
                       (px + 1 >= 0 && px + 1 < dim ? 1 : 0);
            int in_y = (py >= 0 && py < dim ? 1 : 0) +
                       (py + 1 >= 0 && py + 1 < dim ? 1 : 0);
            int corners = in_x * in_y;
            // The checkerboard is anchored so odd cells carry the boundary
            // type (stability) or X (memory).
            bool odd = ((px + py) % 2 + 2) % 2 == 1;
            Basis hot = kind == ExperimentKind::Stability ? boundary_type
                                                          : Basis::X;
            Basis type = odd ? hot : opposite(hot);
            bool keep = false;
            if (corners == 4) {
                keep = true;
            } else if (corners == 2) {
                if (kind == ExperimentKind::Stability) {
                    keep = type == boundary_type;
                } else {
                    // Memory: X boundaries cap the x-extremes, Z boundaries
                    // the y-extremes.
                    keep = in_x == 1 ? type == Basis::X : type == Basis::Z;
                }
            }
            if (!keep) continue;

            Plaquette p;
            p.cell = {px, py};
            p.type = type;
            for (int32_t cx = px; cx <= px + 1; ++cx) {
                for (int32_t cy = py; cy <= py + 1; ++cy) {
                    if (cx < 0 || cy < 0 || cx >= dim || cy >= dim) continue;
                    p.support.push_back(static_cast<uint32_t>(cx) * d +
                                        static_cast<uint32_t>(cy));
                }
            }
            std::sort(p.support.begin(), p.support.end());
            p.ancilla = next_anc++;
            layout.plaquettes.push_back(std::move(p));
        }
    }
    return layout;
}

Circuit gen_stability(const ExperimentSpec& spec) {
    if (spec.kind != ExperimentKind::Stability) {
        throw std::invalid_argument("gen_stability needs a stability spec");
    }
    return gen_experiment(spec);
}

Circuit gen_memory(const ExperimentSpec& spec) {
    if (spec.kind != ExperimentKind::Memory) {
        throw std::invalid_argument("gen_memory needs a memory spec");
    }
    return gen_experiment(spec);
}

Circuit gen_circuit(const ExperimentSpec& spec) {
    return spec.kind == ExperimentKind::Stability ? gen_stability(spec)
                                                  : gen_memory(spec);
}

std::string experiment_filename(const ExperimentSpec& spec, double pu,
                                double pm) {
    std::string s;
    s += "b=";
    s += basis_char(spec.basis);
    s += ",d=" + std::to_string(spec.diameter);
    s += ",pd=" + fmt_double(pu);
    s += ",pm=" + fmt_double(pm);
    s += ",r=" + std::to_string(spec.rounds);
    s += ",type=";
    s += kind_name(spec.kind);
    s += ".stim";
    return s;
}

}  // namespace qec
