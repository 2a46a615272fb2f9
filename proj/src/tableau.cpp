#include "qec/tableau.h"

#include <algorithm>
#include <bit>
#include <cstring>
#include <stdexcept>
#include <utility>

#include "qec/noise.h"

namespace qec {

Tableau::Tableau(uint32_t num_qubits)
    : n_(num_qubits), words_((num_qubits + 63) / 64) {
    x_.assign(size_t(2 * n_ + 1) * words_, 0);
    z_.assign(size_t(2 * n_ + 1) * words_, 0);
    r_.assign(2 * n_ + 1, 0);
    for (uint32_t q = 0; q < n_; ++q) {
        x_[size_t(q) * words_ + q / 64] |= 1ull << (q % 64);              // destab X_q
        z_[size_t(n_ + q) * words_ + q / 64] |= 1ull << (q % 64);        // stab Z_q
    }
}

bool Tableau::xbit(uint32_t i, uint32_t q) const {
    return (x_[size_t(i) * words_ + q / 64] >> (q % 64)) & 1;
}

bool Tableau::zbit(uint32_t i, uint32_t q) const {
    return (z_[size_t(i) * words_ + q / 64] >> (q % 64)) & 1;
}

void Tableau::h(uint32_t q) {
    size_t w = q / 64;
    uint64_t bit = 1ull << (q % 64);
    for (uint32_t i = 0; i < 2 * n_; ++i) {
        uint64_t& xw = x_[size_t(i) * words_ + w];
        uint64_t& zw = z_[size_t(i) * words_ + w];
        r_[i] ^= ((xw & zw) >> (q % 64)) & 1;
        uint64_t xv = xw & bit, zv = zw & bit;
        xw = (xw & ~bit) | zv;
        zw = (zw & ~bit) | xv;
    }
}

void Tableau::cx(uint32_t c, uint32_t t) {
    size_t wc = c / 64, wt = t / 64;
    int bc = c % 64, bt = t % 64;
    for (uint32_t i = 0; i < 2 * n_; ++i) {
        uint64_t* xr = x_.data() + size_t(i) * words_;
        uint64_t* zr = z_.data() + size_t(i) * words_;
        uint64_t xc = (xr[wc] >> bc) & 1, zc = (zr[wc] >> bc) & 1;
        uint64_t xt = (xr[wt] >> bt) & 1, zt = (zr[wt] >> bt) & 1;
        r_[i] ^= static_cast<uint8_t>(xc & zt & (xt ^ zc ^ 1));
        xr[wt] ^= xc << bt;
        zr[wc] ^= zt << bc;
    }
}

void Tableau::cz(uint32_t a, uint32_t b) {
    h(b);
    cx(a, b);
    h(b);
}

void Tableau::pauli_x(uint32_t q) {
    for (uint32_t i = 0; i < 2 * n_; ++i) r_[i] ^= zbit(i, q);
}

void Tableau::pauli_z(uint32_t q) {
    for (uint32_t i = 0; i < 2 * n_; ++i) r_[i] ^= xbit(i, q);
}

void Tableau::rowsum(uint32_t h, uint32_t i) {
    uint64_t* xh = x_.data() + size_t(h) * words_;
    uint64_t* zh = z_.data() + size_t(h) * words_;
    const uint64_t* xi = x_.data() + size_t(i) * words_;
    const uint64_t* zi = z_.data() + size_t(i) * words_;
    int64_t s = 2 * (int64_t(r_[h]) + int64_t(r_[i]));
    for (uint32_t w = 0; w < words_; ++w) {
        uint64_t x1 = xi[w], z1 = zi[w], x2 = xh[w], z2 = zh[w];
        // CHP g-function: +1 and -1 contributions per qubit, as masks.
        uint64_t plus = (x1 & z1 & z2 & ~x2) | (x1 & ~z1 & x2 & z2) |
                        (~x1 & z1 & x2 & ~z2);
        uint64_t minus = (x1 & z1 & x2 & ~z2) | (x1 & ~z1 & ~x2 & z2) |
                         (~x1 & z1 & x2 & z2);
        s += std::popcount(plus) - std::popcount(minus);
        xh[w] ^= x1;
        zh[w] ^= z1;
    }
    r_[h] = static_cast<uint8_t>(((s % 4 + 4) % 4) >> 1);
}

uint8_t Tableau::measure(uint32_t q, ShotRng& rng) {
    uint32_t p = 2 * n_;
    for (uint32_t i = n_; i < 2 * n_; ++i) {
        if (xbit(i, q)) {
            p = i;
            break;
        }
    }
    if (p < 2 * n_) {
        // Indeterminate: outcome is a fresh coin.
        for (uint32_t i = 0; i < 2 * n_; ++i)
            if (i != p && xbit(i, q)) rowsum(i, p);
        std::copy_n(x_.data() + size_t(p) * words_, words_,
                    x_.data() + size_t(p - n_) * words_);
        std::copy_n(z_.data() + size_t(p) * words_, words_,
                    z_.data() + size_t(p - n_) * words_);
        r_[p - n_] = r_[p];
        std::fill_n(x_.data() + size_t(p) * words_, words_, 0);
        std::fill_n(z_.data() + size_t(p) * words_, words_, 0);
        z_[size_t(p) * words_ + q / 64] |= 1ull << (q % 64);
        r_[p] = static_cast<uint8_t>(rng.next() & 1);
        return r_[p];
    }
    // Determinate: accumulate the matching stabilizer product in scratch.
    std::fill_n(x_.data() + size_t(2 * n_) * words_, words_, 0);
    std::fill_n(z_.data() + size_t(2 * n_) * words_, words_, 0);
    r_[2 * n_] = 0;
    for (uint32_t i = 0; i < n_; ++i)
        if (xbit(i, q)) rowsum(2 * n_, i + n_);
    return r_[2 * n_];
}

void Tableau::reset(uint32_t q, ShotRng& rng) {
    if (measure(q, rng)) pauli_x(q);
}

namespace {

// One tableau trajectory of a compiled circuit with the given sparse channel
// events (sorted by instance id) applied as physical operations. Returns the
// raw detector/observable parities.
struct TrajResult {
    std::vector<uint8_t> detectors;
    std::vector<uint8_t> observables;
};

TrajResult run_trajectory(const CompiledCircuit& cc,
                          const std::vector<std::pair<uint32_t, uint8_t>>& events,
                          ShotRng& outcome_rng) {
    Tableau t(cc.num_qubits);
    std::vector<uint8_t> rec(cc.num_measurements, 0);
    size_t cursor = 0;
    for (const Op& op : cc.ops) {
        switch (op.kind) {
            case Op::H:
                t.h(op.a);
                break;
            case Op::CZ:
                t.cz(op.a, op.b);
                break;
            case Op::R:
                t.reset(op.a, outcome_rng);
                break;
            case Op::M:
                rec[op.idx] = t.measure(op.a, outcome_rng);
                break;
            case Op::Chan:
                while (cursor < events.size() && events[cursor].first == op.idx) {
                    const ChannelInstance& ci = cc.channels[op.idx];
                    uint8_t effect = events[cursor].second;
                    if (ci.kind == ChannelKind::MErr) {
                        rec[ci.meas] ^= 1;
                    } else if (ci.kind == ChannelKind::Dep2) {
                        uint8_t a = effect >> 2, b = effect & 3;
                        if (a == 1 || a == 2) t.pauli_x(ci.qubits[0]);
                        if (a == 2 || a == 3) t.pauli_z(ci.qubits[0]);
                        if (b == 1 || b == 2) t.pauli_x(ci.qubits[1]);
                        if (b == 2 || b == 3) t.pauli_z(ci.qubits[1]);
                    } else {
                        if (effect == 1 || effect == 2) t.pauli_x(ci.qubits[0]);
                        if (effect == 2 || effect == 3) t.pauli_z(ci.qubits[0]);
                    }
                    ++cursor;
                }
                break;
        }
    }
    TrajResult out;
    out.detectors.resize(cc.num_detectors);
    for (uint64_t d = 0; d < cc.num_detectors; ++d) {
        uint8_t bit = 0;
        for (uint64_t k = cc.det_offsets[d]; k < cc.det_offsets[d + 1]; ++k)
            bit ^= rec[cc.det_meas[k]];
        out.detectors[d] = bit;
    }
    out.observables.resize(cc.num_observables);
    for (uint32_t o = 0; o < cc.num_observables; ++o) {
        uint8_t bit = 0;
        for (uint64_t k = cc.obs_offsets[o]; k < cc.obs_offsets[o + 1]; ++k)
            bit ^= rec[cc.obs_meas[k]];
        out.observables[o] = bit;
    }
    return out;
}

TrajResult run_noiseless(const CompiledCircuit& cc, uint64_t outcome_seed,
                         uint64_t stream) {
    ShotRng rng(outcome_seed, stream);
    return run_trajectory(cc, {}, rng);
}

}  // namespace

DeterminismReport verify_determinism(const Circuit& ideal, uint64_t trials,
                                     uint64_t seed) {
    if (has_noise(ideal))
        throw std::invalid_argument(
            "verify_determinism requires a noiseless circuit");
    CompiledCircuit cc = compile_circuit(flatten(ideal));
    DeterminismReport report;
    report.trials = trials;
    std::vector<uint8_t> det_bad(cc.num_detectors, 0);
    std::vector<uint8_t> obs_bad(cc.num_observables, 0);
    TrajResult first;
    for (uint64_t trial = 0; trial < trials; ++trial) {
        TrajResult run = run_noiseless(cc, seed, trial);
        if (trial == 0) {
            first = run;
            for (uint64_t d = 0; d < cc.num_detectors; ++d)
                det_bad[d] |= run.detectors[d];  // must be zero as well
        } else {
            for (uint64_t d = 0; d < cc.num_detectors; ++d)
                det_bad[d] |= run.detectors[d] ^ first.detectors[d];
            for (uint32_t o = 0; o < cc.num_observables; ++o)
                obs_bad[o] |= run.observables[o] ^ first.observables[o];
        }
    }
    for (uint64_t d = 0; d < cc.num_detectors; ++d)
        if (det_bad[d]) report.bad_detectors.push_back(d);
    for (uint32_t o = 0; o < cc.num_observables; ++o)
        if (obs_bad[o]) report.bad_observables.push_back(o);
    report.observable_values = first.observables;
    report.ok = report.bad_detectors.empty() && report.bad_observables.empty();
    return report;
}

DetectionData tableau_sample(const Circuit& noisy, uint64_t shots, uint64_t seed,
                             uint64_t outcome_seed) {
    if (shots == 0) throw std::invalid_argument("shots must be positive");
    CompiledCircuit cc = compile_circuit(flatten(noisy));
    TrajResult base = run_noiseless(cc, outcome_seed, UINT64_MAX);

    DetectionData data;
    data.shots = shots;
    data.num_detectors = cc.num_detectors;
    data.num_observables = cc.num_observables;
    data.seed = seed;
    data.det_bits.assign(shots * data.det_stride(), 0);
    data.obs_bits.assign(shots * data.obs_stride(), 0);

    std::vector<std::pair<uint32_t, uint8_t>> events;
    for (uint64_t shot = 0; shot < shots; ++shot) {
        events.clear();
        sample_shot_events(cc, seed, shot, [&](uint32_t id, uint8_t effect) {
            events.emplace_back(id, effect);
        });
        std::sort(events.begin(), events.end());
        ShotRng outcome_rng(outcome_seed, shot);
        TrajResult run = run_trajectory(cc, events, outcome_rng);
        for (uint64_t d = 0; d < cc.num_detectors; ++d)
            if (run.detectors[d] ^ base.detectors[d])
                data.det_bits[shot * data.det_stride() + d / 64] |=
                    1ull << (d % 64);
        for (uint32_t o = 0; o < cc.num_observables; ++o)
            if (run.observables[o] ^ base.observables[o])
                data.obs_bits[shot * data.obs_stride() + o / 64] |=
                    1ull << (o % 64);
    }
    return data;
}

Symptom tableau_inject(const Circuit& c, const std::vector<ErrorLocation>& errs,
                       uint64_t outcome_seed) {
    CompiledCircuit cc = compile_circuit(flatten(c));
    TrajResult base = run_noiseless(cc, outcome_seed, UINT64_MAX);
    std::vector<std::pair<uint32_t, uint8_t>> events;
    for (const ErrorLocation& loc : errs)
        events.emplace_back(resolve_error_location(cc, loc), loc.effect);
    std::sort(events.begin(), events.end());
    ShotRng rng(outcome_seed, 0);
    TrajResult run = run_trajectory(cc, events, rng);
    Symptom sym;
    sym.detectors.resize(cc.num_detectors);
    for (uint64_t d = 0; d < cc.num_detectors; ++d)
        sym.detectors[d] = run.detectors[d] ^ base.detectors[d];
    sym.observables.resize(cc.num_observables);
    for (uint32_t o = 0; o < cc.num_observables; ++o)
        sym.observables[o] = run.observables[o] ^ base.observables[o];
    return sym;
}

}  // namespace qec
