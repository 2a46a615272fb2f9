#include "qec/dem.h"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>

#include "qec/fmt.h"

namespace qec {

namespace {

// Pure-component effect codes per channel kind, fixed order. For Dep2 the
// order is X on qubit 0, Z on qubit 0, X on qubit 1, Z on qubit 1.
int num_components(ChannelKind kind) {
    switch (kind) {
        case ChannelKind::Dep1: return 2;
        case ChannelKind::Dep2: return 4;
        default: return 1;
    }
}

uint8_t component_code(ChannelKind kind, int comp) {
    switch (kind) {
        case ChannelKind::MErr:
        case ChannelKind::XErr: return 1;
        case ChannelKind::ZErr: return 3;
        case ChannelKind::Dep1: return comp == 0 ? 1 : 3;
        case ChannelKind::Dep2: {
            static constexpr uint8_t codes[4] = {4, 12, 1, 3};
            return codes[comp];
        }
    }
    return 1;
}

// Component indices effect `e` splits into (Y contributes both X and Z).
int effect_components(ChannelKind kind, uint8_t e, int out[4]) {
    int n = 0;
    switch (kind) {
        case ChannelKind::MErr:
        case ChannelKind::XErr:
        case ChannelKind::ZErr:
            out[n++] = 0;
            break;
        case ChannelKind::Dep1:
            if (e == 1 || e == 2) out[n++] = 0;
            if (e == 2 || e == 3) out[n++] = 1;
            break;
        case ChannelKind::Dep2: {
            uint8_t a = e >> 2, b = e & 3;
            if (a == 1 || a == 2) out[n++] = 0;
            if (a == 2 || a == 3) out[n++] = 1;
            if (b == 1 || b == 2) out[n++] = 2;
            if (b == 2 || b == 3) out[n++] = 3;
            break;
        }
    }
    return n;
}

struct AtomSymptom {
    std::vector<uint64_t> dets;
    std::vector<uint32_t> obs;
};

}  // namespace

DemExtraction extract_dem_full(const Circuit& noisy) {
    CompiledCircuit cc = compile_circuit(flatten(noisy));

    std::vector<uint64_t> instr_of(cc.channels.size(), 0);
    std::vector<uint32_t> slot_of(cc.channels.size(), 0);
    for (size_t i = 0; i < cc.instr_first.size(); ++i) {
        for (uint32_t s = 0; s < cc.instr_count[i]; ++s) {
            instr_of[static_cast<size_t>(cc.instr_first[i]) + s] = i;
            slot_of[static_cast<size_t>(cc.instr_first[i]) + s] = s;
        }
    }

    // Enumerate one atom per (firing instance, Pauli/flip component).
    struct Atom {
        uint32_t instance;
        uint8_t code;
    };
    std::vector<Atom> atoms;
    std::vector<size_t> first_atom(cc.channels.size() + 1, 0);
    for (uint32_t id = 0; id < cc.channels.size(); ++id) {
        first_atom[id] = atoms.size();
        const ChannelInstance& ci = cc.channels[id];
        if (ci.p <= 0.0) continue;
        for (int c = 0; c < num_components(ci.kind); ++c)
            atoms.push_back({id, component_code(ci.kind, c)});
    }
    first_atom[cc.channels.size()] = atoms.size();

    // Propagate atoms 64 per block, one lane each.
    std::vector<AtomSymptom> symptoms(atoms.size());
    int64_t num_blocks = static_cast<int64_t>((atoms.size() + 63) / 64);
#ifdef _OPENMP
#pragma omp parallel
#endif
    {
        std::vector<uint64_t> records(cc.num_measurements, 0);
        std::vector<uint64_t> det_words(cc.num_detectors, 0);
        std::vector<uint64_t> obs_words(cc.num_observables, 0);
        BlockEvents ev;
#ifdef _OPENMP
#pragma omp for schedule(static)
#endif
        for (int64_t b = 0; b < num_blocks; ++b) {
            size_t base = static_cast<size_t>(b) * 64;
            int valid = static_cast<int>(
                std::min<size_t>(64, atoms.size() - base));
            ev.entries.clear();
            for (int s = 0; s < valid; ++s)
                ev.add(cc, atoms[base + s].instance, atoms[base + s].code,
                       1ull << s);
            ev.sort_and_merge();
            run_block(cc, ev, records.data());
            block_detectors(cc, records.data(), det_words.data(),
                            obs_words.data());
            for (uint64_t d = 0; d < cc.num_detectors; ++d) {
                uint64_t w = det_words[d];
                while (w) {
                    int s = std::countr_zero(w);
                    w &= w - 1;
                    if (s < valid) symptoms[base + s].dets.push_back(d);
                }
            }
            for (uint32_t o = 0; o < cc.num_observables; ++o) {
                uint64_t w = obs_words[o];
                while (w) {
                    int s = std::countr_zero(w);
                    w &= w - 1;
                    if (s < valid) symptoms[base + s].obs.push_back(o);
                }
            }
        }
    }

    for (size_t i = 0; i < atoms.size(); ++i) {
        if (symptoms[i].dets.size() > 2) {
            const ChannelInstance& ci = cc.channels[atoms[i].instance];
            throw std::runtime_error(
                "error component touches " +
                std::to_string(symptoms[i].dets.size()) +
                " detectors (instruction " +
                std::to_string(instr_of[atoms[i].instance]) + ", qubit " +
                std::to_string(ci.qubits[0]) +
                "): circuit is not graphlike");
        }
    }

    // XOR-accumulate each effect's probability into its components' symptom
    // mechanisms. std::map keys give the canonical (detectors, observables)
    // output order.
    using Key = std::pair<std::vector<uint64_t>, std::vector<uint32_t>>;
    std::map<Key, double> acc;
    std::map<Key, ErrorLocation> witness;
    for (uint32_t id = 0; id < cc.channels.size(); ++id) {
        const ChannelInstance& ci = cc.channels[id];
        if (ci.p <= 0.0) continue;
        double p_eff = ci.p / ci.num_effects;
        for (uint8_t e = 1; e <= ci.num_effects; ++e) {
            int comps[4];
            int n = effect_components(ci.kind, e, comps);
            for (int k = 0; k < n; ++k) {
                const AtomSymptom& s = symptoms[first_atom[id] + comps[k]];
                if (s.dets.empty() && s.obs.empty()) continue;
                Key key{s.dets, s.obs};
                auto [it, inserted] = acc.emplace(key, 0.0);
                it->second = xor_probability(it->second, p_eff);
                if (inserted)
                    witness.emplace(
                        key, ErrorLocation{instr_of[id], slot_of[id],
                                           component_code(ci.kind, comps[k])});
            }
        }
    }

    DemExtraction out;
    for (const auto& [key, p] : acc) {
        ErrorMechanism m{p, key.first, key.second};
        if (key.first.empty()) {
            out.diagnostics.push_back(std::move(m));
        } else {
            out.mechanisms.push_back(std::move(m));
            out.witnesses.push_back(witness.at(key));
        }
    }
    return out;
}

std::vector<ErrorMechanism> extract_dem(const Circuit& noisy) {
    return extract_dem_full(noisy).mechanisms;
}

DecodingGraph build_graph(const std::vector<ErrorMechanism>& mechs,
                          uint64_t num_detectors) {
    DecodingGraph g;
    g.num_detectors = num_detectors;
    // Per node pair: an XOR-combined probability per distinct observable
    // mask. Mechanisms sharing a mask are interchangeable errors and combine;
    // when masks conflict (degenerate corner mechanisms in memory patches,
    // e.g. a hook component and a logical-column data error firing the same
    // boundary detector), the most probable variant defines the edge and the
    // minority variant is dropped — one edge can carry only one correction.
    std::map<std::pair<uint64_t, uint64_t>, std::map<uint32_t, double>> merged;
    for (const ErrorMechanism& m : mechs) {
        if (m.detectors.empty() || m.detectors.size() > 2)
            throw std::invalid_argument(
                "matching graph mechanism must touch 1 or 2 detectors");
        if (m.p <= 0.0)
            throw std::invalid_argument("mechanism probability must be > 0");
        uint64_t a = m.detectors[0];
        uint64_t b =
            m.detectors.size() == 2 ? m.detectors[1] : num_detectors;
        if (a >= num_detectors || b > num_detectors || (a >= b))
            throw std::invalid_argument("mechanism detector out of range");
        uint32_t mask = 0;
        for (uint32_t o : m.observables) {
            if (o >= 32)
                throw std::invalid_argument("observable index exceeds mask width");
            mask |= 1u << o;
        }
        double& combined = merged[{a, b}][mask];
        combined = xor_probability(combined, m.p);
    }
    for (const auto& [key, variants] : merged) {
        GraphEdge e{key.first, key.second, -1.0, 0.0, 0};
        for (const auto& [mask, p] : variants) {
            if (p > e.p) {  // ties keep the first (smallest) mask
                e.p = p;
                e.obs_mask = mask;
            }
        }
        if (e.p >= 0.5)
            throw std::invalid_argument(
                "mechanism probability " + fmt_double(e.p) +
                " between nodes " + std::to_string(e.a) + " and " +
                std::to_string(e.b) + " is >= 0.5 (non-positive weight)");
        e.weight = std::log((1.0 - e.p) / e.p);
        g.edges.push_back(e);
    }

    g.adj_offsets.assign(g.num_nodes() + 1, 0);
    for (const GraphEdge& e : g.edges) {
        ++g.adj_offsets[e.a + 1];
        ++g.adj_offsets[e.b + 1];
    }
    for (size_t i = 1; i < g.adj_offsets.size(); ++i)
        g.adj_offsets[i] += g.adj_offsets[i - 1];
    g.adj_edges.resize(g.adj_offsets.back());
    std::vector<uint64_t> cursor(g.adj_offsets.begin(), g.adj_offsets.end() - 1);
    for (uint32_t id = 0; id < g.edges.size(); ++id) {
        g.adj_edges[cursor[g.edges[id].a]++] = id;
        g.adj_edges[cursor[g.edges[id].b]++] = id;
    }
    return g;
}

void write_dem(const std::vector<ErrorMechanism>& mechs, std::ostream& out) {
    for (const ErrorMechanism& m : mechs) {
        out << "error(" << fmt_double_sig(m.p, 12) << ")";
        for (uint64_t d : m.detectors) out << " D" << d;
        for (uint32_t o : m.observables) out << " L" << o;
        out << "\n";
    }
}

std::vector<ErrorMechanism> read_dem(std::istream& in) {
    std::vector<ErrorMechanism> mechs;
    std::string line;
    size_t line_no = 0;
    auto fail = [&](const std::string& msg) {
        throw std::runtime_error("dem line " + std::to_string(line_no) + ": " +
                                 msg);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line.rfind("error(", 0) != 0) fail("expected error(<p>)");
        const char* ptr = line.data() + 6;
        const char* end = line.data() + line.size();
        double p = 0.0;
        auto [next, ec] = std::from_chars(ptr, end, p);
        if (ec != std::errc() || next >= end || *next != ')')
            fail("bad probability");
        if (!(p > 0.0) || p >= 1.0) fail("probability out of range");
        ptr = next + 1;
        ErrorMechanism m;
        m.p = p;
        while (ptr < end) {
            if (*ptr != ' ') fail("expected space before target");
            ++ptr;
            if (ptr >= end) fail("trailing space");
            char tag = *ptr++;
            uint64_t value = 0;
            auto [vnext, vec] = std::from_chars(ptr, end, value);
            if (vec != std::errc()) fail("bad target index");
            ptr = vnext;
            if (tag == 'D') {
                m.detectors.push_back(value);
            } else if (tag == 'L') {
                m.observables.push_back(static_cast<uint32_t>(value));
            } else {
                fail("unknown target tag");
            }
        }
        if (m.detectors.empty() || m.detectors.size() > 2)
            fail("mechanism must have 1 or 2 detectors");
        if (!std::is_sorted(m.detectors.begin(), m.detectors.end()) ||
            (m.detectors.size() == 2 && m.detectors[0] == m.detectors[1]))
            fail("detectors must be sorted and distinct");
        if (!std::is_sorted(m.observables.begin(), m.observables.end()))
            fail("observables must be sorted");
        mechs.push_back(std::move(m));
    }
    return mechs;
}

}  // namespace qec
