#pragma once

#include <charconv>
#include <string>
#include <system_error>

namespace qec {

// Shortest round-trip representation (what the circuit format prints:
// "0", "-0.5", "0.001"). std::to_chars is locale-free and deterministic.
inline std::string fmt_double(double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// printf("%.{sig}g")-style: up to `sig` significant digits, trailing zeros
// dropped. Used for detector-error-model probabilities.
inline std::string fmt_double_sig(double v, int sig) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v,
                             std::chars_format::general, sig);
    return std::string(buf, res.ptr);
}

}  // namespace qec
