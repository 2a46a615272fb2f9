#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace qec {

// In-memory form of the text circuit format: the instruction subset used by
// the generated experiments plus the noise channel instructions.

enum class InstrKind : uint8_t {
    QubitCoords,
    R,
    H,
    CZ,
    M,
    Tick,
    Detector,
    ObservableInclude,
    ShiftCoords,
    Repeat,
    Depolarize1,
    Depolarize2,
    XError,
    ZError,
};

const char* instr_name(InstrKind k);

// A gate target: a qubit index, or a measurement-record lookback rec[-k].
struct Target {
    uint32_t value = 0;
    bool is_rec = false;

    static Target qubit(uint32_t q) { return {q, false}; }
    static Target rec(uint32_t k) { return {k, true}; }
    bool operator==(const Target&) const = default;
};

struct Instruction {
    InstrKind kind;
    std::vector<double> args;     // coordinates, probabilities, repeat count
    std::vector<Target> targets;
    std::vector<Instruction> body;  // REPEAT only

    uint64_t repeat_count() const { return static_cast<uint64_t>(args.at(0)); }
    bool operator==(const Instruction&) const = default;
};

struct Circuit {
    std::vector<Instruction> instructions;

    bool operator==(const Circuit&) const = default;

    // Declared coordinates (QUBIT_COORDS), keyed by qubit index.
    std::map<uint32_t, std::array<double, 2>> qubit_coords() const;
    // Highest referenced qubit index + 1, over gates and declarations.
    uint32_t num_qubits() const;
    uint64_t num_measurements() const;  // with REPEAT multiplicity
    uint64_t num_detectors() const;
    uint32_t num_observables() const;  // max OBSERVABLE_INCLUDE index + 1
    // Absolute per-detector coordinates after SHIFT_COORDS accumulation,
    // padded/truncated to three entries (x, y, t).
    std::vector<std::array<double, 3>> detector_coords() const;
};

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Parses circuit text. One instruction per line; `#` comments and blank
// lines are accepted and dropped; REPEAT blocks use `{`/`}`. Rejects unknown
// instruction names, malformed targets, out-of-range probabilities, and
// rec[-k] references that reach back past the measurements available at that
// point (for a REPEAT body: available in its first iteration).
Circuit parse_circuit(std::string_view text);

// Canonical text form: one instruction per line, ", "-joined parenthesized
// args, space-separated targets, REPEAT bodies indented four spaces per
// depth, trailing newline on every line. parse(serialize(c)) == c.
std::string serialize_circuit(const Circuit& c);

// Expands REPEAT blocks, folds SHIFT_COORDS into absolute DETECTOR
// coordinates, and drops the SHIFT_COORDS instructions. Measurement,
// detector, and observable semantics are unchanged.
Circuit flatten(const Circuit& c);

// Every rec[-k] resolved to an absolute measurement index (0-based, in
// execution order). Works on unflattened circuits too: REPEAT bodies are
// walked per iteration, so resolving before or after flatten agrees.
struct RecordMap {
    uint64_t num_measurements = 0;
    std::vector<std::vector<uint64_t>> detectors;
    std::vector<std::vector<uint64_t>> observables;  // index = observable id
};
RecordMap resolve_records(const Circuit& c);

}  // namespace qec
