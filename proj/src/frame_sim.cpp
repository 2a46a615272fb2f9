#include "qec/frame_sim.h"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <cstring>
#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace qec {

namespace {

uint8_t effects_for(ChannelKind kind) {
    switch (kind) {
        case ChannelKind::Dep1: return 3;
        case ChannelKind::Dep2: return 15;
        default: return 1;
    }
}

ChannelKind channel_kind_of(InstrKind kind) {
    switch (kind) {
        case InstrKind::Depolarize1: return ChannelKind::Dep1;
        case InstrKind::Depolarize2: return ChannelKind::Dep2;
        case InstrKind::XError: return ChannelKind::XErr;
        case InstrKind::ZError: return ChannelKind::ZErr;
        default: throw std::logic_error("not a channel instruction");
    }
}

/// In-place transpose of a 64x64 bit matrix held as 64 words, least
// significant bit first (bit j of word i <-> bit i of word j). Butterfly
// network over block sizes 32..1: at each scale the high bit-half of word k
// trades places with the low bit-half of word k+j.
void transpose64(uint64_t a[64]) {
    uint64_t m = 0x00000000FFFFFFFFull;
    for (int j = 32; j != 0; j >>= 1, m ^= m << j) {
        for (int k = 0; k < 64; k = (k + j + 1) & ~j) {
            uint64_t t = (a[k + j] ^ (a[k] >> j)) & m;
            a[k + j] ^= t;
            a[k] ^= t << j;
        }
    }
}

}  // namespace

CompiledCircuit compile_circuit(const Circuit& flat) {
    CompiledCircuit cc;
    if (flat.num_measurements() > UINT32_MAX)
        throw std::invalid_argument("too many measurements to compile");
    cc.num_qubits = flat.num_qubits();
    cc.num_measurements = static_cast<uint32_t>(flat.num_measurements());
    cc.num_detectors = flat.num_detectors();
    cc.num_observables = flat.num_observables();

    std::map<std::pair<int, double>, size_t> class_index;
    auto add_instance = [&](ChannelKind kind, double p,
                            std::array<uint32_t, 2> qubits,
                            uint32_t meas) -> uint32_t {
        uint32_t id = static_cast<uint32_t>(cc.channels.size());
        cc.channels.push_back({kind, p, qubits, meas, effects_for(kind)});
        if (p > 0.0) {
            auto key = std::make_pair(static_cast<int>(kind), p);
            auto it = class_index.find(key);
            if (it == class_index.end()) {
                it = class_index.emplace(key, cc.classes.size()).first;
                cc.classes.push_back({kind, p, GeometricSkip(p), {}});
            }
            cc.classes[it->second].instances.push_back(id);
        }
        return id;
    };

    uint32_t meas = 0;
    cc.instr_first.assign(flat.instructions.size(), -1);
    cc.instr_count.assign(flat.instructions.size(), 0);
    for (size_t i = 0; i < flat.instructions.size(); ++i) {
        const Instruction& instr = flat.instructions[i];
        int64_t first = -1;
        uint32_t count = 0;
        switch (instr.kind) {
            case InstrKind::Repeat:
                throw std::invalid_argument(
                    "compile_circuit requires a flattened circuit");
            case InstrKind::H:
                for (const Target& t : instr.targets)
                    cc.ops.push_back({Op::H, t.value, 0, 0});
                break;
            case InstrKind::R:
                for (const Target& t : instr.targets)
                    cc.ops.push_back({Op::R, t.value, 0, 0});
                break;
            case InstrKind::CZ:
                for (size_t k = 0; k + 1 < instr.targets.size(); k += 2)
                    cc.ops.push_back({Op::CZ, instr.targets[k].value,
                                      instr.targets[k + 1].value, 0});
                break;
            case InstrKind::M: {
                double p = instr.args.empty() ? 0.0 : instr.args[0];
                for (const Target& t : instr.targets) {
                    cc.ops.push_back({Op::M, t.value, 0, meas});
                    uint32_t id =
                        add_instance(ChannelKind::MErr, p, {t.value, 0}, meas);
                    cc.ops.push_back({Op::Chan, t.value, 0, id});
                    if (first < 0) first = id;
                    ++count;
                    ++meas;
                }
                break;
            }
            case InstrKind::Depolarize1:
            case InstrKind::XError:
            case InstrKind::ZError: {
                ChannelKind kind = channel_kind_of(instr.kind);
                for (const Target& t : instr.targets) {
                    uint32_t id = add_instance(kind, instr.args[0], {t.value, 0}, 0);
                    cc.ops.push_back({Op::Chan, t.value, 0, id});
                    if (first < 0) first = id;
                    ++count;
                }
                break;
            }
            case InstrKind::Depolarize2:
                for (size_t k = 0; k + 1 < instr.targets.size(); k += 2) {
                    uint32_t id = add_instance(
                        ChannelKind::Dep2, instr.args[0],
                        {instr.targets[k].value, instr.targets[k + 1].value}, 0);
                    cc.ops.push_back({Op::Chan, instr.targets[k].value,
                                      instr.targets[k + 1].value, id});
                    if (first < 0) first = id;
                    ++count;
                }
                break;
            default:
                break;  // coords, ticks, detectors: no runtime ops
        }
        cc.instr_first[i] = first;
        cc.instr_count[i] = count;
    }

    RecordMap records = resolve_records(flat);
    cc.det_offsets.push_back(0);
    for (const auto& det : records.detectors) {
        for (uint64_t m : det) cc.det_meas.push_back(static_cast<uint32_t>(m));
        cc.det_offsets.push_back(cc.det_meas.size());
    }
    cc.obs_offsets.push_back(0);
    for (const auto& obs : records.observables) {
        for (uint64_t m : obs) cc.obs_meas.push_back(static_cast<uint32_t>(m));
        cc.obs_offsets.push_back(cc.obs_meas.size());
    }
    return cc;
}

void BlockEvents::add(const CompiledCircuit& cc, uint32_t id, uint8_t effect,
                      uint64_t lane_mask) {
    const ChannelInstance& ci = cc.channels[id];
    Entry e;
    e.id = id;
    switch (ci.kind) {
        case ChannelKind::MErr:
            e.flip = lane_mask;
            break;
        case ChannelKind::Dep2: {
            uint8_t a = effect >> 2, b = effect & 3;
            if (a == 1 || a == 2) e.x0 = lane_mask;
            if (a == 2 || a == 3) e.z0 = lane_mask;
            if (b == 1 || b == 2) e.x1 = lane_mask;
            if (b == 2 || b == 3) e.z1 = lane_mask;
            break;
        }
        default:  // single-qubit Pauli code 1..3
            if (effect == 1 || effect == 2) e.x0 = lane_mask;
            if (effect == 2 || effect == 3) e.z0 = lane_mask;
            break;
    }
    entries.push_back(e);
}

void BlockEvents::sort_and_merge() {
    std::sort(entries.begin(), entries.end(),
              [](const Entry& a, const Entry& b) { return a.id < b.id; });
    size_t out = 0;
    for (size_t i = 0; i < entries.size(); ++i) {
        if (out > 0 && entries[out - 1].id == entries[i].id) {
            entries[out - 1].x0 ^= entries[i].x0;
            entries[out - 1].z0 ^= entries[i].z0;
            entries[out - 1].x1 ^= entries[i].x1;
            entries[out - 1].z1 ^= entries[i].z1;
            entries[out - 1].flip ^= entries[i].flip;
        } else {
            entries[out++] = entries[i];
        }
    }
    entries.resize(out);
}

void run_block(const CompiledCircuit& cc, const BlockEvents& ev,
               uint64_t* records) {
    std::vector<uint64_t> fx(cc.num_qubits, 0), fz(cc.num_qubits, 0);
    size_t cursor = 0;
    for (const Op& op : cc.ops) {
        switch (op.kind) {
            case Op::H:
                std::swap(fx[op.a], fz[op.a]);
                break;
            case Op::CZ:
                fz[op.a] ^= fx[op.b];
                fz[op.b] ^= fx[op.a];
                break;
            case Op::R:
                fx[op.a] = 0;
                fz[op.a] = 0;
                break;
            case Op::M:
                records[op.idx] = fx[op.a];
                break;
            case Op::Chan:
                while (cursor < ev.entries.size() &&
                       ev.entries[cursor].id == op.idx) {
                    const BlockEvents::Entry& e = ev.entries[cursor];
                    const ChannelInstance& ci = cc.channels[op.idx];
                    if (ci.kind == ChannelKind::MErr) {
                        records[ci.meas] ^= e.flip;
                    } else {
                        fx[ci.qubits[0]] ^= e.x0;
                        fz[ci.qubits[0]] ^= e.z0;
                        if (ci.kind == ChannelKind::Dep2) {
                            fx[ci.qubits[1]] ^= e.x1;
                            fz[ci.qubits[1]] ^= e.z1;
                        }
                    }
                    ++cursor;
                }
                break;
        }
    }
}

void block_detectors(const CompiledCircuit& cc, const uint64_t* records,
                     uint64_t* det_words, uint64_t* obs_words) {
    for (uint64_t d = 0; d < cc.num_detectors; ++d) {
        uint64_t w = 0;
        for (uint64_t k = cc.det_offsets[d]; k < cc.det_offsets[d + 1]; ++k)
            w ^= records[cc.det_meas[k]];
        det_words[d] = w;
    }
    for (uint32_t o = 0; o < cc.num_observables; ++o) {
        uint64_t w = 0;
        for (uint64_t k = cc.obs_offsets[o]; k < cc.obs_offsets[o + 1]; ++k)
            w ^= records[cc.obs_meas[k]];
        obs_words[o] = w;
    }
}

int resolve_workers(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("QECSTAB_WORKERS")) {
        int v = std::atoi(env);
        if (v > 0) return v;
    }
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

namespace {

// Shared shell: sizes and zeroed bit storage for `shots` rows.
DetectionData make_data(const CompiledCircuit& cc, uint64_t shots,
                        uint64_t seed) {
    DetectionData data;
    data.shots = shots;
    data.num_detectors = cc.num_detectors;
    data.num_observables = cc.num_observables;
    data.seed = seed;
    data.det_bits.assign(shots * data.det_stride(), 0);
    data.obs_bits.assign(shots * data.obs_stride(), 0);
    return data;
}

// Transposes `count` column-major words (bit lane = shot) into per-shot rows
// of `stride` words each, storing rows for the first `valid` lanes.
void scatter_rows(const uint64_t* words, uint64_t count, uint64_t* rows,
                  size_t stride, uint64_t first_row, int valid) {
    uint64_t buf[64];
    for (size_t chunk = 0; chunk * 64 < count || chunk < stride; ++chunk) {
        for (int i = 0; i < 64; ++i) {
            uint64_t src = chunk * 64 + static_cast<uint64_t>(i);
            buf[i] = src < count ? words[src] : 0;
        }
        transpose64(buf);
        for (int s = 0; s < valid; ++s)
            rows[(first_row + s) * stride + chunk] = buf[s];
        if (chunk + 1 >= stride) break;
    }
}

void sample_block(const CompiledCircuit& cc, uint64_t seed,
                  uint64_t first_shot, int valid, BlockEvents& ev,
                  uint64_t* records, uint64_t* det_words,
                  uint64_t* obs_words) {
    ev.entries.clear();
    for (int s = 0; s < valid; ++s) {
        uint64_t lane = 1ull << s;
        sample_shot_events(cc, seed, first_shot + s,
                           [&](uint32_t id, uint8_t effect) {
                               ev.add(cc, id, effect, lane);
                           });
    }
    ev.sort_and_merge();
    run_block(cc, ev, records);
    block_detectors(cc, records, det_words, obs_words);
}

}  // namespace

DetectionData sample_frames(const CompiledCircuit& cc, uint64_t shots,
                            uint64_t seed, int workers, uint64_t first_shot) {
    if (shots == 0) throw std::invalid_argument("shots must be positive");
    DetectionData data = make_data(cc, shots, seed);
    uint64_t num_blocks = (shots + 63) / 64;
    int threads = resolve_workers(workers);
    (void)threads;
#ifdef _OPENMP
#pragma omp parallel num_threads(threads)
#endif
    {
        std::vector<uint64_t> records(cc.num_measurements, 0);
        std::vector<uint64_t> det_words(data.det_stride() * 64, 0);
        std::vector<uint64_t> obs_words(data.obs_stride() * 64, 0);
        BlockEvents ev;
#ifdef _OPENMP
#pragma omp for schedule(static)
#endif
        for (int64_t b = 0; b < static_cast<int64_t>(num_blocks); ++b) {
            uint64_t row0 = static_cast<uint64_t>(b) * 64;
            int valid = static_cast<int>(std::min<uint64_t>(64, shots - row0));
            sample_block(cc, seed, first_shot + row0, valid, ev,
                         records.data(), det_words.data(), obs_words.data());
            scatter_rows(det_words.data(), cc.num_detectors, data.det_bits.data(),
                         data.det_stride(), row0, valid);
            scatter_rows(obs_words.data(), cc.num_observables,
                         data.obs_bits.data(), data.obs_stride(), row0, valid);
        }
    }
    return data;
}

DetectionData sample_frames_reference(const CompiledCircuit& cc,
                                      uint64_t shots, uint64_t seed,
                                      uint64_t first_shot) {
    if (shots == 0) throw std::invalid_argument("shots must be positive");
    DetectionData data = make_data(cc, shots, seed);
    std::vector<uint8_t> fx(cc.num_qubits), fz(cc.num_qubits);
    std::vector<uint8_t> rec(cc.num_measurements);
    std::vector<std::pair<uint32_t, uint8_t>> events;
    for (uint64_t shot = 0; shot < shots; ++shot) {
        events.clear();
        sample_shot_events(cc, seed, first_shot + shot,
                           [&](uint32_t id, uint8_t effect) {
                               events.emplace_back(id, effect);
                           });
        std::sort(events.begin(), events.end());
        std::fill(fx.begin(), fx.end(), 0);
        std::fill(fz.begin(), fz.end(), 0);
        size_t cursor = 0;
        for (const Op& op : cc.ops) {
            switch (op.kind) {
                case Op::H:
                    std::swap(fx[op.a], fz[op.a]);
                    break;
                case Op::CZ:
                    fz[op.a] ^= fx[op.b];
                    fz[op.b] ^= fx[op.a];
                    break;
                case Op::R:
                    fx[op.a] = 0;
                    fz[op.a] = 0;
                    break;
                case Op::M:
                    rec[op.idx] = fx[op.a];
                    break;
                case Op::Chan:
                    while (cursor < events.size() &&
                           events[cursor].first == op.idx) {
                        const ChannelInstance& ci = cc.channels[op.idx];
                        uint8_t effect = events[cursor].second;
                        if (ci.kind == ChannelKind::MErr) {
                            rec[ci.meas] ^= 1;
                        } else if (ci.kind == ChannelKind::Dep2) {
                            uint8_t a = effect >> 2, b = effect & 3;
                            fx[ci.qubits[0]] ^= (a == 1 || a == 2);
                            fz[ci.qubits[0]] ^= (a == 2 || a == 3);
                            fx[ci.qubits[1]] ^= (b == 1 || b == 2);
                            fz[ci.qubits[1]] ^= (b == 2 || b == 3);
                        } else {
                            fx[ci.qubits[0]] ^= (effect == 1 || effect == 2);
                            fz[ci.qubits[0]] ^= (effect == 2 || effect == 3);
                        }
                        ++cursor;
                    }
                    break;
            }
        }
        for (uint64_t d = 0; d < cc.num_detectors; ++d) {
            uint8_t bit = 0;
            for (uint64_t k = cc.det_offsets[d]; k < cc.det_offsets[d + 1]; ++k)
                bit ^= rec[cc.det_meas[k]];
            if (bit)
                data.det_bits[shot * data.det_stride() + d / 64] |=
                    1ull << (d % 64);
        }
        for (uint32_t o = 0; o < cc.num_observables; ++o) {
            uint8_t bit = 0;
            for (uint64_t k = cc.obs_offsets[o]; k < cc.obs_offsets[o + 1]; ++k)
                bit ^= rec[cc.obs_meas[k]];
            if (bit)
                data.obs_bits[shot * data.obs_stride() + o / 64] |=
                    1ull << (o % 64);
        }
    }
    return data;
}

DetectionData sample_frames(const Circuit& flat_noisy, uint64_t shots,
                            uint64_t seed, int workers) {
    return sample_frames(compile_circuit(flat_noisy), shots, seed, workers);
}

uint32_t resolve_error_location(const CompiledCircuit& cc,
                                const ErrorLocation& loc) {
    if (loc.instruction >= cc.instr_first.size())
        throw std::out_of_range("error location: instruction out of range");
    if (cc.instr_first[loc.instruction] < 0)
        throw std::invalid_argument(
            "error location: instruction has no fault sites");
    if (loc.slot >= cc.instr_count[loc.instruction])
        throw std::out_of_range("error location: slot out of range");
    uint32_t id =
        static_cast<uint32_t>(cc.instr_first[loc.instruction]) + loc.slot;
    if (loc.effect < 1 || loc.effect > cc.channels[id].num_effects)
        throw std::out_of_range("error location: effect out of range");
    return id;
}

Symptom inject_errors(const CompiledCircuit& cc,
                      const std::vector<ErrorLocation>& errs) {
    BlockEvents ev;
    for (const ErrorLocation& loc : errs)
        ev.add(cc, resolve_error_location(cc, loc), loc.effect, 1);
    ev.sort_and_merge();
    std::vector<uint64_t> records(cc.num_measurements, 0);
    run_block(cc, ev, records.data());
    std::vector<uint64_t> det_words(cc.num_detectors, 0);
    std::vector<uint64_t> obs_words(cc.num_observables, 0);
    block_detectors(cc, records.data(), det_words.data(), obs_words.data());
    Symptom sym;
    sym.detectors.resize(cc.num_detectors);
    for (uint64_t d = 0; d < cc.num_detectors; ++d)
        sym.detectors[d] = det_words[d] & 1;
    sym.observables.resize(cc.num_observables);
    for (uint32_t o = 0; o < cc.num_observables; ++o)
        sym.observables[o] = obs_words[o] & 1;
    return sym;
}

Symptom inject_errors(const Circuit& flat,
                      const std::vector<ErrorLocation>& errs) {
    return inject_errors(compile_circuit(flat), errs);
}

void write_dets(const DetectionData& data, std::ostream& out) {
    out << "# detectors=" << data.num_detectors
        << " observables=" << data.num_observables << " seed=" << data.seed
        << "\n";
    std::string line(data.num_detectors + 1 + data.num_observables, ':');
    for (uint64_t s = 0; s < data.shots; ++s) {
        for (uint64_t d = 0; d < data.num_detectors; ++d)
            line[d] = data.det(s, d) ? '1' : '0';
        for (uint32_t o = 0; o < data.num_observables; ++o)
            line[data.num_detectors + 1 + o] = data.obs(s, o) ? '1' : '0';
        out << line << '\n';
    }
}

namespace {

uint64_t parse_header_field(const std::string& header, const std::string& key,
                            size_t& pos) {
    size_t at = header.find(key, pos);
    if (at == std::string::npos)
        throw std::runtime_error("detection data header missing " + key);
    at += key.size();
    uint64_t value = 0;
    auto [ptr, ec] = std::from_chars(header.data() + at,
                                     header.data() + header.size(), value);
    if (ec != std::errc())
        throw std::runtime_error("detection data header: bad value for " + key);
    pos = static_cast<size_t>(ptr - header.data());
    return value;
}

}  // namespace

DetectionData read_dets(std::istream& in) {
    std::string header;
    if (!std::getline(in, header) || header.rfind("# ", 0) != 0)
        throw std::runtime_error("detection data must start with '# ' header");
    size_t pos = 0;
    DetectionData data;
    data.num_detectors = parse_header_field(header, "detectors=", pos);
    data.num_observables =
        static_cast<uint32_t>(parse_header_field(header, "observables=", pos));
    data.seed = parse_header_field(header, "seed=", pos);

    std::string line;
    uint64_t expect = data.num_detectors + 1 + data.num_observables;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line.size() != expect)
            throw std::runtime_error("detection data row has wrong length");
        if (line[data.num_detectors] != ':')
            throw std::runtime_error("detection data row missing ':'");
        uint64_t s = data.shots++;
        data.det_bits.resize(data.shots * data.det_stride(), 0);
        data.obs_bits.resize(data.shots * data.obs_stride(), 0);
        for (uint64_t d = 0; d < data.num_detectors; ++d) {
            char c = line[d];
            if (c != '0' && c != '1')
                throw std::runtime_error("detection data row has bad digit");
            if (c == '1')
                data.det_bits[s * data.det_stride() + d / 64] |= 1ull << (d % 64);
        }
        for (uint32_t o = 0; o < data.num_observables; ++o) {
            char c = line[data.num_detectors + 1 + o];
            if (c != '0' && c != '1')
                throw std::runtime_error("detection data row has bad digit");
            if (c == '1')
                data.obs_bits[s * data.obs_stride() + o / 64] |= 1ull << (o % 64);
        }
    }
    return data;
}

}  // namespace qec
