#include "qec/circuit.h"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "qec/fmt.h"

namespace qec {

namespace {

// Order matches InstrKind.
constexpr const char* kNames[] = {
    "QUBIT_COORDS", "R", "H", "CZ", "M", "TICK", "DETECTOR",
    "OBSERVABLE_INCLUDE", "SHIFT_COORDS", "REPEAT", "DEPOLARIZE1",
    "DEPOLARIZE2", "X_ERROR", "Z_ERROR",
};

[[noreturn]] void fail(size_t line, const std::string& msg) {
    throw ParseError("line " + std::to_string(line) + ": " + msg);
}

std::string_view trim(std::string_view s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_number(std::string_view tok, size_t line) {
    double v = 0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size() || !std::isfinite(v)) {
        fail(line, "bad number '" + std::string(tok) + "'");
    }
    return v;
}

uint64_t parse_uint(std::string_view tok, size_t line, const char* what) {
    uint64_t v = 0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size()) {
        fail(line, std::string("bad ") + what + " '" + std::string(tok) + "'");
    }
    return v;
}

struct Line {
    size_t number;  // 1-based position in the input
    std::string_view text;
};

class Parser {
  public:
    explicit Parser(std::string_view text) {
        size_t line_no = 0;
        while (!text.empty()) {
            size_t nl = text.find('\n');
            std::string_view raw =
                nl == std::string_view::npos ? text : text.substr(0, nl);
            text = nl == std::string_view::npos ? std::string_view{}
                                                : text.substr(nl + 1);
            ++line_no;
            if (size_t h = raw.find('#'); h != std::string_view::npos) {
                raw = raw.substr(0, h);
            }
            std::string_view t = trim(raw);
            if (!t.empty()) lines_.push_back({line_no, t});
        }
    }

    Circuit parse() {
        Circuit c;
        c.instructions = parse_block(/*top_level=*/true, 0);
        return c;
    }

  private:
    std::vector<Line> lines_;
    size_t pos_ = 0;
    uint64_t measurements_ = 0;  // records available so far (first-iteration
                                 // semantics inside REPEAT bodies)

    std::vector<Instruction> parse_block(bool top_level, size_t open_line) {
        std::vector<Instruction> out;
        while (pos_ < lines_.size()) {
            const Line& ln = lines_[pos_];
            if (ln.text == "}") {
                if (top_level) fail(ln.number, "unmatched '}'");
                ++pos_;
                return out;
            }
            ++pos_;
            bool opened = false;
            Instruction ins = parse_instruction(ln, &opened);
            if (opened) {
                uint64_t before = measurements_;
                ins.body = parse_block(/*top_level=*/false, ln.number);
                if (ins.body.empty()) fail(ln.number, "empty REPEAT block");
                uint64_t per_iter = measurements_ - before;
                measurements_ = before + per_iter * ins.repeat_count();
            }
            out.push_back(std::move(ins));
        }
        if (!top_level) fail(open_line, "unterminated REPEAT block");
        return out;
    }

    Instruction parse_instruction(const Line& ln, bool* opened) {
        std::string_view s = ln.text;
        size_t i = 0;
        while (i < s.size() &&
               ((s[i] >= 'A' && s[i] <= 'Z') || (s[i] >= '0' && s[i] <= '9') ||
                s[i] == '_')) {
            ++i;
        }
        std::string_view name = s.substr(0, i);
        if (name.empty()) fail(ln.number, "expected instruction name");
        int kind_idx = -1;
        for (int k = 0; k < static_cast<int>(std::size(kNames)); ++k) {
            if (name == kNames[k]) {
                kind_idx = k;
                break;
            }
        }
        if (kind_idx < 0) {
            fail(ln.number, "unknown instruction '" + std::string(name) + "'");
        }
        Instruction ins;
        ins.kind = static_cast<InstrKind>(kind_idx);

        if (ins.kind == InstrKind::Repeat) {
            // REPEAT <count> {
            std::vector<std::string_view> toks = split_tokens(s.substr(i));
            if (toks.size() != 2 || toks[1] != "{") {
                fail(ln.number, "expected 'REPEAT <count> {'");
            }
            uint64_t n = parse_uint(toks[0], ln.number, "repeat count");
            if (n == 0) fail(ln.number, "repeat count must be positive");
            ins.args.push_back(static_cast<double>(n));
            *opened = true;
            return ins;
        }

        while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
        if (i < s.size() && s[i] == '(') {
            size_t close = s.find(')', i);
            if (close == std::string_view::npos) {
                fail(ln.number, "missing ')'");
            }
            std::string_view inside = s.substr(i + 1, close - i - 1);
            while (!inside.empty()) {
                size_t comma = inside.find(',');
                std::string_view tok =
                    trim(comma == std::string_view::npos ? inside
                                                         : inside.substr(0, comma));
                inside = comma == std::string_view::npos
                             ? std::string_view{}
                             : inside.substr(comma + 1);
                if (tok.empty()) fail(ln.number, "empty parenthesized argument");
                ins.args.push_back(parse_number(tok, ln.number));
            }
            i = close + 1;
        }

        for (std::string_view tok : split_tokens(s.substr(i))) {
            if (tok.starts_with("rec[-") && tok.ends_with("]")) {
                std::string_view num = tok.substr(5, tok.size() - 6);
                uint64_t k = parse_uint(num, ln.number, "record lookback");
                if (k == 0) fail(ln.number, "record lookback must be >= 1");
                if (k > measurements_) {
                    fail(ln.number, "rec[-" + std::to_string(k) +
                                        "] reaches past the " +
                                        std::to_string(measurements_) +
                                        " records available");
                }
                ins.targets.push_back(Target::rec(static_cast<uint32_t>(k)));
            } else {
                uint64_t q = parse_uint(tok, ln.number, "qubit target");
                if (q > UINT32_MAX) fail(ln.number, "qubit index too large");
                ins.targets.push_back(Target::qubit(static_cast<uint32_t>(q)));
            }
        }

        validate(ins, ln.number);
        if (ins.kind == InstrKind::M) measurements_ += ins.targets.size();
        return ins;
    }

    static std::vector<std::string_view> split_tokens(std::string_view s) {
        std::vector<std::string_view> out;
        size_t i = 0;
        while (i < s.size()) {
            while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
            size_t b = i;
            while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
            if (i > b) out.push_back(s.substr(b, i - b));
        }
        return out;
    }

    static void validate(const Instruction& ins, size_t line) {
        const char* name = kNames[static_cast<int>(ins.kind)];
        auto want_qubits = [&](bool distinct) {
            for (const Target& t : ins.targets) {
                if (t.is_rec) {
                    fail(line, std::string(name) +
                                   " takes qubit targets, not records");
                }
            }
            if (distinct) {
                std::vector<uint32_t> q;
                for (const Target& t : ins.targets) q.push_back(t.value);
                std::sort(q.begin(), q.end());
                if (std::adjacent_find(q.begin(), q.end()) != q.end()) {
                    fail(line, std::string(name) + " has a duplicate target");
                }
            }
        };
        auto want_records = [&] {
            for (const Target& t : ins.targets) {
                if (!t.is_rec) {
                    fail(line, std::string(name) +
                                   " takes record targets like rec[-1]");
                }
            }
        };
        auto want_probability = [&] {
            if (ins.args.size() != 1) {
                fail(line, std::string(name) + " takes exactly one argument");
            }
            if (!(ins.args[0] >= 0.0 && ins.args[0] <= 1.0)) {
                fail(line, std::string(name) + " probability must be in [0, 1]");
            }
        };

        switch (ins.kind) {
            case InstrKind::QubitCoords:
                if (ins.args.size() != 2) {
                    fail(line, "QUBIT_COORDS takes exactly two coordinates");
                }
                if (ins.targets.size() != 1) {
                    fail(line, "QUBIT_COORDS takes exactly one qubit");
                }
                want_qubits(false);
                break;
            case InstrKind::R:
            case InstrKind::H:
                if (!ins.args.empty()) {
                    fail(line, std::string(name) + " takes no arguments");
                }
                if (ins.targets.empty()) {
                    fail(line, std::string(name) + " needs at least one target");
                }
                want_qubits(true);
                break;
            case InstrKind::CZ:
            case InstrKind::Depolarize2:
                if (ins.kind == InstrKind::CZ && !ins.args.empty()) {
                    fail(line, "CZ takes no arguments");
                }
                if (ins.kind == InstrKind::Depolarize2) want_probability();
                if (ins.targets.empty() || ins.targets.size() % 2 != 0) {
                    fail(line, std::string(name) +
                                   " needs a positive even number of targets");
                }
                want_qubits(true);
                break;
            case InstrKind::M:
                if (ins.args.size() > 1) {
                    fail(line, "M takes at most one argument");
                }
                if (ins.args.size() == 1 &&
                    !(ins.args[0] >= 0.0 && ins.args[0] <= 1.0)) {
                    fail(line, "M flip probability must be in [0, 1]");
                }
                if (ins.targets.empty()) {
                    fail(line, "M needs at least one target");
                }
                want_qubits(true);
                break;
            case InstrKind::Tick:
                if (!ins.args.empty() || !ins.targets.empty()) {
                    fail(line, "TICK takes no arguments or targets");
                }
                break;
            case InstrKind::Detector:
                want_records();
                break;
            case InstrKind::ObservableInclude: {
                if (ins.args.size() != 1) {
                    fail(line, "OBSERVABLE_INCLUDE takes exactly one index");
                }
                double a = ins.args[0];
                if (a < 0 || a != std::floor(a)) {
                    fail(line, "observable index must be a nonnegative integer");
                }
                want_records();
                break;
            }
            case InstrKind::ShiftCoords:
                if (ins.args.empty()) {
                    fail(line, "SHIFT_COORDS needs at least one coordinate");
                }
                if (!ins.targets.empty()) {
                    fail(line, "SHIFT_COORDS takes no targets");
                }
                break;
            case InstrKind::Depolarize1:
            case InstrKind::XError:
            case InstrKind::ZError:
                want_probability();
                if (ins.targets.empty()) {
                    fail(line, std::string(name) + " needs at least one target");
                }
                want_qubits(true);
                break;
            case InstrKind::Repeat:
                break;  // handled before validate()
        }
    }
};

void serialize_into(const std::vector<Instruction>& instrs, int depth,
                    std::string& out) {
    for (const Instruction& ins : instrs) {
        out.append(static_cast<size_t>(depth) * 4, ' ');
        if (ins.kind == InstrKind::Repeat) {
            out += "REPEAT ";
            out += fmt_double(ins.args.at(0));
            out += " {\n";
            serialize_into(ins.body, depth + 1, out);
            out.append(static_cast<size_t>(depth) * 4, ' ');
            out += "}\n";
            continue;
        }
        out += kNames[static_cast<int>(ins.kind)];
        if (!ins.args.empty()) {
            out += '(';
            for (size_t i = 0; i < ins.args.size(); ++i) {
                if (i) out += ", ";
                out += fmt_double(ins.args[i]);
            }
            out += ')';
        }
        for (const Target& t : ins.targets) {
            out += ' ';
            if (t.is_rec) {
                out += "rec[-";
                out += std::to_string(t.value);
                out += ']';
            } else {
                out += std::to_string(t.value);
            }
        }
        out += '\n';
    }
}

// Walks instructions in execution order, expanding REPEAT bodies.
template <typename F>
void for_each_executed(const std::vector<Instruction>& instrs, F&& f) {
    for (const Instruction& ins : instrs) {
        if (ins.kind == InstrKind::Repeat) {
            for (uint64_t i = 0; i < ins.repeat_count(); ++i) {
                for_each_executed(ins.body, f);
            }
        } else {
            f(ins);
        }
    }
}

}  // namespace

const char* instr_name(InstrKind k) { return kNames[static_cast<int>(k)]; }

std::map<uint32_t, std::array<double, 2>> Circuit::qubit_coords() const {
    std::map<uint32_t, std::array<double, 2>> out;
    for_each_executed(instructions, [&](const Instruction& ins) {
        if (ins.kind == InstrKind::QubitCoords) {
            out[ins.targets[0].value] = {ins.args[0], ins.args[1]};
        }
    });
    return out;
}

uint32_t Circuit::num_qubits() const {
    uint32_t max_plus_1 = 0;
    for_each_executed(instructions, [&](const Instruction& ins) {
        for (const Target& t : ins.targets) {
            if (!t.is_rec) max_plus_1 = std::max(max_plus_1, t.value + 1);
        }
    });
    return max_plus_1;
}

uint64_t Circuit::num_measurements() const {
    // Per-block counting keeps this O(instructions) even for huge repeats.
    struct Count {
        static uint64_t of(const std::vector<Instruction>& instrs) {
            uint64_t n = 0;
            for (const Instruction& ins : instrs) {
                if (ins.kind == InstrKind::Repeat) {
                    n += ins.repeat_count() * of(ins.body);
                } else if (ins.kind == InstrKind::M) {
                    n += ins.targets.size();
                }
            }
            return n;
        }
    };
    return Count::of(instructions);
}

uint64_t Circuit::num_detectors() const {
    struct Count {
        static uint64_t of(const std::vector<Instruction>& instrs) {
            uint64_t n = 0;
            for (const Instruction& ins : instrs) {
                if (ins.kind == InstrKind::Repeat) {
                    n += ins.repeat_count() * of(ins.body);
                } else if (ins.kind == InstrKind::Detector) {
                    n += 1;
                }
            }
            return n;
        }
    };
    return Count::of(instructions);
}

uint32_t Circuit::num_observables() const {
    uint32_t n = 0;
    for_each_executed(instructions, [&](const Instruction& ins) {
        if (ins.kind == InstrKind::ObservableInclude) {
            n = std::max(n, static_cast<uint32_t>(ins.args[0]) + 1);
        }
    });
    return n;
}

std::vector<std::array<double, 3>> Circuit::detector_coords() const {
    std::vector<std::array<double, 3>> out;
    std::vector<double> shift;
    for_each_executed(instructions, [&](const Instruction& ins) {
        if (ins.kind == InstrKind::ShiftCoords) {
            if (shift.size() < ins.args.size()) shift.resize(ins.args.size(), 0);
            for (size_t i = 0; i < ins.args.size(); ++i) shift[i] += ins.args[i];
        } else if (ins.kind == InstrKind::Detector) {
            std::array<double, 3> c{0, 0, 0};
            for (size_t i = 0; i < 3; ++i) {
                if (i < ins.args.size()) c[i] += ins.args[i];
                if (i < shift.size()) c[i] += shift[i];
            }
            out.push_back(c);
        }
    });
    return out;
}

Circuit parse_circuit(std::string_view text) { return Parser(text).parse(); }

std::string serialize_circuit(const Circuit& c) {
    std::string out;
    serialize_into(c.instructions, 0, out);
    return out;
}

Circuit flatten(const Circuit& c) {
    Circuit out;
    std::vector<double> shift;
    for_each_executed(c.instructions, [&](const Instruction& ins) {
        if (ins.kind == InstrKind::ShiftCoords) {
            if (shift.size() < ins.args.size()) shift.resize(ins.args.size(), 0);
            for (size_t i = 0; i < ins.args.size(); ++i) shift[i] += ins.args[i];
            return;
        }
        Instruction copy = ins;
        if (copy.kind == InstrKind::Detector) {
            if (copy.args.size() < shift.size()) copy.args.resize(shift.size(), 0);
            for (size_t i = 0; i < shift.size(); ++i) copy.args[i] += shift[i];
        }
        out.instructions.push_back(std::move(copy));
    });
    return out;
}

RecordMap resolve_records(const Circuit& c) {
    RecordMap map;
    for_each_executed(c.instructions, [&](const Instruction& ins) {
        switch (ins.kind) {
            case InstrKind::M:
                map.num_measurements += ins.targets.size();
                break;
            case InstrKind::Detector: {
                std::vector<uint64_t> recs;
                recs.reserve(ins.targets.size());
                for (const Target& t : ins.targets) {
                    recs.push_back(map.num_measurements - t.value);
                }
                map.detectors.push_back(std::move(recs));
                break;
            }
            case InstrKind::ObservableInclude: {
                auto idx = static_cast<size_t>(ins.args[0]);
                if (map.observables.size() <= idx) {
                    map.observables.resize(idx + 1);
                }
                for (const Target& t : ins.targets) {
                    map.observables[idx].push_back(map.num_measurements -
                                                   t.value);
                }
                break;
            }
            default:
                break;
        }
    });
    return map;
}

}  // namespace qec
