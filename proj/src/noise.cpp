#include "qec/noise.h"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace qec {

namespace {

bool is_channel_instr(const Instruction& ins) {
    switch (ins.kind) {
        case InstrKind::Depolarize1:
        case InstrKind::Depolarize2:
        case InstrKind::XError:
        case InstrKind::ZError:
            return true;
        case InstrKind::M:
            return !ins.args.empty();
        default:
            return false;
    }
}

bool is_gate_layer_instr(InstrKind k) {
    return k == InstrKind::R || k == InstrKind::H || k == InstrKind::CZ ||
           k == InstrKind::M;
}

Instruction make_channel(InstrKind kind, double p,
                         const std::vector<Target>& targets) {
    return {kind, {p}, targets, {}};
}

// Streams one block's instructions, buffering each TICK-delimited layer so
// idle noise can be appended once the layer's touched-qubit set is known.
struct Noiser {
    const NoiseModel& m;
    const std::set<uint32_t>& declared;

    std::vector<Instruction> process(const std::vector<Instruction>& block) {
        std::vector<Instruction> out;
        std::vector<Instruction> layer;
        std::set<uint32_t> touched;
        bool layer_has_gate = false;

        auto flush = [&](bool with_tick) {
            bool idles = layer_has_gate && m.p_u > 0.0;
            if (idles && !m.idle_during_measure_reset) {
                // Only unitary layers idle in this mode.
                idles = std::none_of(
                    layer.begin(), layer.end(), [](const Instruction& i) {
                        return i.kind == InstrKind::R || i.kind == InstrKind::M;
                    });
            }
            if (idles) {
                std::vector<Target> idle;
                for (uint32_t q : declared) {
                    if (!touched.count(q)) idle.push_back(Target::qubit(q));
                }
                if (!idle.empty()) {
                    layer.push_back(
                        make_channel(InstrKind::Depolarize1, m.p_u, idle));
                }
            }
            out.insert(out.end(), std::make_move_iterator(layer.begin()),
                       std::make_move_iterator(layer.end()));
            layer.clear();
            touched.clear();
            layer_has_gate = false;
            if (with_tick) out.push_back({InstrKind::Tick, {}, {}, {}});
        };

        for (const Instruction& ins : block) {
            if (ins.kind == InstrKind::Tick) {
                flush(true);
                continue;
            }
            if (ins.kind == InstrKind::Repeat) {
                flush(false);
                Instruction rep = ins;
                rep.body = process(ins.body);
                out.push_back(std::move(rep));
                continue;
            }
            if (is_gate_layer_instr(ins.kind)) {
                layer_has_gate = true;
                for (const Target& t : ins.targets) touched.insert(t.value);
            }
            switch (ins.kind) {
                case InstrKind::R:
                    layer.push_back(ins);
                    if (m.p_m > 0.0) {
                        layer.push_back(make_channel(InstrKind::XError, m.p_m,
                                                     ins.targets));
                    }
                    break;
                case InstrKind::H:
                    layer.push_back(ins);
                    if (m.p_u > 0.0) {
                        layer.push_back(make_channel(InstrKind::Depolarize1,
                                                     m.p_u, ins.targets));
                    }
                    break;
                case InstrKind::CZ:
                    layer.push_back(ins);
                    if (m.p_u > 0.0) {
                        layer.push_back(make_channel(InstrKind::Depolarize2,
                                                     m.p_u, ins.targets));
                    }
                    break;
                case InstrKind::M: {
                    Instruction meas = ins;
                    if (m.p_m > 0.0) meas.args = {m.p_m};
                    layer.push_back(std::move(meas));
                    if (m.p_m > 0.0) {
                        layer.push_back(make_channel(InstrKind::Depolarize1,
                                                     m.p_m, ins.targets));
                    }
                    break;
                }
                default:
                    layer.push_back(ins);
                    break;
            }
        }
        flush(false);
        return out;
    }
};

}  // namespace

std::vector<std::pair<ChannelEffect, double>> channel_distribution(
    const Channel& ch) {
    std::vector<std::pair<ChannelEffect, double>> dist;
    double p = ch.p;
    switch (ch.kind) {
        case ChannelKind::MErr: {
            dist.push_back({ChannelEffect{}, 1.0 - p});
            ChannelEffect flip;
            flip.measurement_flip = true;
            dist.push_back({flip, p});
            break;
        }
        case ChannelKind::XErr:
        case ChannelKind::ZErr: {
            dist.push_back({ChannelEffect{}, 1.0 - p});
            ChannelEffect e;
            e.pauli[0] = ch.kind == ChannelKind::XErr ? 1 : 3;
            dist.push_back({e, p});
            break;
        }
        case ChannelKind::Dep1: {
            dist.push_back({ChannelEffect{}, 1.0 - p});
            for (uint8_t pa = 1; pa <= 3; ++pa) {
                ChannelEffect e;
                e.pauli[0] = pa;
                dist.push_back({e, p / 3.0});
            }
            break;
        }
        case ChannelKind::Dep2: {
            dist.push_back({ChannelEffect{}, 1.0 - p});
            for (uint8_t code = 1; code <= 15; ++code) {
                ChannelEffect e;
                e.pauli[0] = code >> 2;
                e.pauli[1] = code & 3;
                dist.push_back({e, p / 15.0});
            }
            break;
        }
    }
    return dist;
}

Circuit apply_noise(const Circuit& c, const NoiseModel& m) {
    if (has_noise(c)) {
        throw std::invalid_argument("circuit already contains noise channels");
    }
    if (!(m.p_u >= 0.0 && m.p_u <= 1.0 && m.p_m >= 0.0 && m.p_m <= 1.0)) {
        throw std::invalid_argument("noise strengths must be in [0, 1]");
    }
    std::set<uint32_t> declared;
    for (const auto& [q, xy] : c.qubit_coords()) declared.insert(q);
    Noiser noiser{m, declared};
    Circuit noisy;
    noisy.instructions = noiser.process(c.instructions);
    return noisy;
}

Circuit strip_noise(const Circuit& noisy) {
    struct Strip {
        static std::vector<Instruction> of(
            const std::vector<Instruction>& block) {
            std::vector<Instruction> out;
            for (const Instruction& ins : block) {
                switch (ins.kind) {
                    case InstrKind::Depolarize1:
                    case InstrKind::Depolarize2:
                    case InstrKind::XError:
                    case InstrKind::ZError:
                        break;
                    case InstrKind::M: {
                        Instruction meas = ins;
                        meas.args.clear();
                        out.push_back(std::move(meas));
                        break;
                    }
                    case InstrKind::Repeat: {
                        Instruction rep = ins;
                        rep.body = of(ins.body);
                        out.push_back(std::move(rep));
                        break;
                    }
                    default:
                        out.push_back(ins);
                        break;
                }
            }
            return out;
        }
    };
    Circuit ideal;
    ideal.instructions = Strip::of(noisy.instructions);
    return ideal;
}

bool has_noise(const Circuit& c) {
    struct Scan {
        static bool of(const std::vector<Instruction>& block) {
            for (const Instruction& ins : block) {
                if (is_channel_instr(ins)) return true;
                if (ins.kind == InstrKind::Repeat && of(ins.body)) return true;
            }
            return false;
        }
    };
    return Scan::of(c.instructions);
}

}  // namespace qec
