#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

// Shared helpers for the unit suites.

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// The checked-in reference circuit: stability, b=Z, d=4, r=25, noiseless.
inline std::string golden_path() {
    return std::string(TEST_DATA_DIR) + "/stability_z_d4_r25.stim";
}

// Runs f, expecting it to throw; returns the exception message ("" if f
// returned normally). Keeps message-content checks version-agnostic.
template <typename F>
inline std::string error_of(F&& f) {
    try {
        f();
    } catch (const std::exception& e) {
        return e.what();
    }
    return "";
}

inline bool contains(const std::string& hay, const std::string& needle) {
    return hay.find(needle) != std::string::npos;
}
