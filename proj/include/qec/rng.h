#pragma once

#include <cstdint>
#include <vector>

namespace qec {

// Counter-based per-shot randomness.
//
// Every shot gets its own SplitMix64 stream whose initial state is a pure
// function of (seed, shot index). Workers can therefore process shots in any
// order, in any grouping, and the sampled bytes never change. All floating
// point work below is plain IEEE multiply/add (no libm), so streams are also
// bit-identical across platforms.

// SplitMix64 output scrambler (Steele et al.). Used both to step streams and
// to derive child seeds.
inline uint64_t mix64(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Child seed derivation, e.g. one seed per sweep cell. Documented contract:
// child = mix64(mix64(seed ^ salt) ^ index).
inline uint64_t derive_seed(uint64_t seed, uint64_t salt, uint64_t index) {
    return mix64(mix64(seed ^ salt) ^ index);
}

class ShotRng {
  public:
    ShotRng(uint64_t seed, uint64_t shot)
        : state_(mix64(mix64(seed ^ 0x243F6A8885A308D3ULL) ^ shot)) {}

    uint64_t next() {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix64(state_);
    }

    // Uniform in [0, 1) with 53 random bits; exact IEEE scaling.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n) via 128-bit multiply-shift (Lemire). The
    // modulo bias is ~n/2^64, irrelevant for n <= 15.
    uint32_t below(uint32_t n) {
        return static_cast<uint32_t>(
            (static_cast<unsigned __int128>(next()) * n) >> 64);
    }

  private:
    uint64_t state_;
};

// Geometric-skip sampler: given independent events each firing with
// probability p, draws how many consecutive events do NOT fire before the
// next one that does. Uses a truncated CDF table built by iterated IEEE
// multiplication (cdf[k] = 1 - (1-p)^(k+1)) plus binary search, so there is
// no log() call whose libm rounding could differ between machines. Landing
// past the table tail advances by the table span and redraws, which is exact
// by memorylessness.
class GeometricSkip {
  public:
    explicit GeometricSkip(double p) : p_(p) {
        if (p_ <= 0.0 || p_ >= 1.0) return;  // degenerate: table unused
        cdf_.reserve(kSpan);
        double q = 1.0;
        for (int k = 0; k < kSpan; ++k) {
            q *= (1.0 - p_);
            cdf_.push_back(1.0 - q);
            if (q == 0.0) break;  // underflow: tail mass exactly zero
        }
    }

    double p() const { return p_; }

    // Number of non-firing events before the next firing one.
    uint64_t draw(ShotRng& rng) const {
        if (p_ >= 1.0) return 0;
        if (p_ <= 0.0) return UINT64_MAX;  // never fires
        uint64_t skip = 0;
        for (;;) {
            double u = rng.uniform();
            if (u < cdf_.back()) {
                // First k with u < cdf[k].
                size_t lo = 0, hi = cdf_.size() - 1;
                while (lo < hi) {
                    size_t mid = (lo + hi) / 2;
                    if (u < cdf_[mid]) hi = mid; else lo = mid + 1;
                }
                return skip + lo;
            }
            skip += cdf_.size();
        }
    }

  private:
    static constexpr int kSpan = 4096;
    double p_;
    std::vector<double> cdf_;
};

}  // namespace qec
