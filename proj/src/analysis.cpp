#include "qec/analysis.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "qec/circuit.h"
#include "qec/decoder.h"
#include "qec/dem.h"
#include "qec/fmt.h"
#include "qec/frame_sim.h"
#include "qec/noise.h"
#include "qec/rng.h"

namespace qec {

namespace {

constexpr uint64_t kSaltSweepCell = 0x73776565702e636cull;   // "sweep.cl"
constexpr uint64_t kSaltSweepPoint = 0x73776565702e7074ull;  // "sweep.pt"

// Binomial log-likelihood, safe at the endpoints (0*log(0) taken as 0).
double log_likelihood(double p, uint64_t k, uint64_t n) {
    double ll = 0.0;
    if (k > 0) ll += static_cast<double>(k) * std::log(p);
    if (n - k > 0) ll += static_cast<double>(n - k) * std::log1p(-p);
    return ll;
}

}  // namespace

FitResult fit_suppression(const std::vector<RatePoint>& points) {
    if (points.size() < 2) {
        throw std::invalid_argument(
            "fit_suppression requires at least two points");
    }
    for (const RatePoint& pt : points) {
        if (pt.shots == 0) {
            throw std::invalid_argument("fit_suppression: point has no shots");
        }
        if (pt.errors == 0) {
            throw std::invalid_argument("insufficient errors; increase shots");
        }
    }
    double mean_x = 0.0;
    double mean_y = 0.0;
    for (const RatePoint& pt : points) {
        mean_x += static_cast<double>(pt.code_distance);
        mean_y += std::log10(pt.p_logical());
    }
    const double inv_n = 1.0 / static_cast<double>(points.size());
    mean_x *= inv_n;
    mean_y *= inv_n;

    double sxx = 0.0;
    double sxy = 0.0;
    for (const RatePoint& pt : points) {
        const double dx = static_cast<double>(pt.code_distance) - mean_x;
        const double dy = std::log10(pt.p_logical()) - mean_y;
        sxx += dx * dx;
        sxy += dx * dy;
    }
    if (sxx == 0.0) {
        throw std::invalid_argument(
            "fit_suppression requires at least two distinct code distances");
    }
    FitResult fit;
    fit.slope = sxy / sxx;
    fit.intercept = mean_y - fit.slope * mean_x;
    fit.suppression_db = -10.0 * fit.slope;
    return fit;
}

BayesRegion bayes_region(uint64_t k, uint64_t n, double bound) {
    if (n == 0) throw std::invalid_argument("bayes_region requires n >= 1");
    if (k > n) throw std::invalid_argument("bayes_region requires k <= n");
    if (!(bound > 1.0)) {
        throw std::invalid_argument("bayes_region requires bound > 1");
    }
    BayesRegion region;
    region.k = k;
    region.n = n;
    region.bound = bound;

    const double p_hat = static_cast<double>(k) / static_cast<double>(n);
    // Likelihood at the maximum; zero when the MLE sits on an endpoint.
    const double ll_max = (k == 0 || k == n) ? 0.0 : log_likelihood(p_hat, k, n);
    const double target = ll_max - std::log(bound);

    // The region is the interval around p_hat where the log-likelihood stays
    // above `target`; the likelihood is unimodal, so each side bisects.
    if (k == 0) {
        region.lo = 0.0;
    } else {
        double a = 0.0;      // below target
        double b = p_hat;    // at or above target
        for (int it = 0; it < 100 && b - a > 1e-13; ++it) {
            const double m = 0.5 * (a + b);
            if (log_likelihood(m, k, n) >= target) {
                b = m;
            } else {
                a = m;
            }
        }
        region.lo = 0.5 * (a + b);
    }
    if (k == n) {
        region.hi = 1.0;
    } else {
        double a = p_hat;    // at or above target
        double b = 1.0;      // below target
        for (int it = 0; it < 100 && b - a > 1e-13; ++it) {
            const double m = 0.5 * (a + b);
            if (log_likelihood(m, k, n) >= target) {
                a = m;
            } else {
                b = m;
            }
        }
        region.hi = 0.5 * (a + b);
    }
    return region;
}

CellPoint run_point(const ExperimentSpec& spec, double pu, double pm,
                    uint64_t shots, uint64_t seed, const RunOptions& opt) {
    if (shots == 0) throw std::invalid_argument("run_point requires shots > 0");
    if (opt.slab_shots == 0) {
        throw std::invalid_argument("run_point requires a nonzero slab size");
    }
    CellPoint pt;
    pt.spec = spec;
    pt.pu = pu;
    pt.pm = pm;
    pt.shots = shots;

    NoiseModel noise;
    noise.p_u = pu;
    noise.p_m = pm;
    const Circuit noisy = apply_noise(gen_circuit(spec), noise);
    const CompiledCircuit cc = compile_circuit(flatten(noisy));
    const std::vector<ErrorMechanism> mechanisms = extract_dem(noisy);
    const DecodingGraph graph = build_graph(mechanisms, cc.num_detectors);

    std::unique_ptr<ApspTable> apsp;
    if (opt.use_apsp) apsp = std::make_unique<ApspTable>(graph);

    uint64_t errors = 0;
    for (uint64_t first = 0; first < shots; first += opt.slab_shots) {
        const uint64_t count = std::min<uint64_t>(opt.slab_shots, shots - first);
        const DetectionData data =
            sample_frames(cc, count, seed, opt.workers, first);
        const DecodeResult result =
            decode_batch(graph, data, opt.workers, apsp.get());
        errors += result.errors;
    }
    pt.errors = errors;
    pt.region = bayes_region(errors, shots, opt.bayes_bound);
    return pt;
}

namespace {

void fit_point_set(const std::vector<CellPoint>& points, bool& censored,
                   FitResult& fit) {
    std::vector<RatePoint> usable;
    for (const CellPoint& pt : points) {
        if (pt.errors > 0) {
            usable.push_back({pt.code_distance(), pt.shots, pt.errors});
        }
    }
    censored = usable.size() < 2;
    if (!censored) fit = fit_suppression(usable);
}

}  // namespace

SweepTable sweep(const std::vector<std::pair<double, double>>& grid,
                 const std::vector<ExperimentSpec>& specs, uint64_t shots,
                 uint64_t seed, const RunOptions& opt) {
    if (grid.empty()) throw std::invalid_argument("sweep requires a grid");
    if (specs.empty()) throw std::invalid_argument("sweep requires specs");
    SweepTable table;
    table.cells.reserve(grid.size());
    for (size_t ci = 0; ci < grid.size(); ++ci) {
        const uint64_t cell_seed = derive_seed(seed, kSaltSweepCell, ci);
        SweepCell cell;
        cell.pu = grid[ci].first;
        cell.pm = grid[ci].second;
        cell.points.reserve(specs.size());
        for (size_t si = 0; si < specs.size(); ++si) {
            const uint64_t point_seed =
                derive_seed(cell_seed, kSaltSweepPoint, si);
            cell.points.push_back(
                run_point(specs[si], cell.pu, cell.pm, shots, point_seed, opt));
        }
        fit_point_set(cell.points, cell.censored, cell.fit);
        table.cells.push_back(std::move(cell));
    }
    return table;
}

std::vector<GroupFit> fit_groups(const std::vector<CellPoint>& points) {
    std::vector<GroupFit> groups;
    for (const CellPoint& pt : points) {
        GroupFit* group = nullptr;
        for (GroupFit& g : groups) {
            if (g.kind == pt.spec.kind && g.basis == pt.spec.basis &&
                g.pu == pt.pu && g.pm == pt.pm) {
                group = &g;
                break;
            }
        }
        if (group == nullptr) {
            groups.emplace_back();
            group = &groups.back();
            group->kind = pt.spec.kind;
            group->basis = pt.spec.basis;
            group->pu = pt.pu;
            group->pm = pt.pm;
        }
        group->points.push_back(pt);
    }
    for (GroupFit& g : groups) {
        fit_point_set(g.points, g.censored, g.fit);
    }
    return groups;
}

namespace {

uint64_t parse_u64_field(std::string_view text, const char* what,
                         size_t line_no) {
    uint64_t value = 0;
    const auto [ptr, ec] =
        std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw std::runtime_error("csv: line " + std::to_string(line_no) +
                                 ": bad " + what + " '" + std::string(text) +
                                 "'");
    }
    return value;
}

double parse_double_field(std::string_view text, const char* what,
                          size_t line_no) {
    double value = 0.0;
    const auto [ptr, ec] =
        std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw std::runtime_error("csv: line " + std::to_string(line_no) +
                                 ": bad " + what + " '" + std::string(text) +
                                 "'");
    }
    return value;
}

constexpr const char* kCsvHeader =
    "type,basis,d,rounds,pu,pm,shots,errors,p_logical,region_lo,region_hi";

}  // namespace

void emit_csv(const std::vector<CellPoint>& points, std::ostream& out) {
    out << kCsvHeader << '\n';
    for (const CellPoint& pt : points) {
        out << kind_name(pt.spec.kind) << ',' << basis_char(pt.spec.basis)
            << ',' << pt.spec.diameter << ',' << pt.spec.rounds << ','
            << fmt_double(pt.pu) << ',' << fmt_double(pt.pm) << ',' << pt.shots
            << ',' << pt.errors << ',' << fmt_double(pt.p_logical()) << ','
            << fmt_double(pt.region.lo) << ',' << fmt_double(pt.region.hi)
            << '\n';
    }
}

std::vector<CellPoint> read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw std::runtime_error("csv: empty input");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kCsvHeader) {
        throw std::runtime_error("csv: unexpected header '" + line + "'");
    }
    std::vector<CellPoint> points;
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string_view> fields;
        std::string_view rest = line;
        while (true) {
            const size_t comma = rest.find(',');
            if (comma == std::string_view::npos) {
                fields.push_back(rest);
                break;
            }
            fields.push_back(rest.substr(0, comma));
            rest.remove_prefix(comma + 1);
        }
        if (fields.size() != 11) {
            throw std::runtime_error("csv: line " + std::to_string(line_no) +
                                     ": expected 11 fields, got " +
                                     std::to_string(fields.size()));
        }
        CellPoint pt;
        if (fields[0] == "stability") {
            pt.spec.kind = ExperimentKind::Stability;
        } else if (fields[0] == "memory") {
            pt.spec.kind = ExperimentKind::Memory;
        } else {
            throw std::runtime_error("csv: line " + std::to_string(line_no) +
                                     ": unknown type '" + std::string(fields[0]) +
                                     "'");
        }
        if (fields[1] == "X") {
            pt.spec.basis = Basis::X;
        } else if (fields[1] == "Z") {
            pt.spec.basis = Basis::Z;
        } else {
            throw std::runtime_error("csv: line " + std::to_string(line_no) +
                                     ": unknown basis '" +
                                     std::string(fields[1]) + "'");
        }
        pt.spec.diameter =
            static_cast<uint32_t>(parse_u64_field(fields[2], "d", line_no));
        pt.spec.rounds = parse_u64_field(fields[3], "rounds", line_no);
        pt.pu = parse_double_field(fields[4], "pu", line_no);
        pt.pm = parse_double_field(fields[5], "pm", line_no);
        pt.shots = parse_u64_field(fields[6], "shots", line_no);
        pt.errors = parse_u64_field(fields[7], "errors", line_no);
        // Field 8 (p_logical) is derived from shots/errors; not stored.
        pt.region.k = pt.errors;
        pt.region.n = pt.shots;
        pt.region.lo = parse_double_field(fields[9], "region_lo", line_no);
        pt.region.hi = parse_double_field(fields[10], "region_hi", line_no);
        points.push_back(pt);
    }
    return points;
}

namespace {

struct SvgGroup {
    ExperimentKind kind;
    Basis basis;
    uint32_t diameter;
    uint64_t rounds;
    std::vector<const CellPoint*> points;
};

std::string svg_num(double v) { return fmt_double_sig(v, 7); }

std::string decade_label(int exponent) {
    return "1e" + std::to_string(exponent);
}

}  // namespace

void emit_svg(const std::vector<CellPoint>& points, std::ostream& out) {
    if (points.empty()) {
        throw std::invalid_argument("emit_svg requires at least one point");
    }

    std::vector<SvgGroup> groups;
    for (const CellPoint& pt : points) {
        SvgGroup* group = nullptr;
        for (SvgGroup& g : groups) {
            if (g.kind == pt.spec.kind && g.basis == pt.spec.basis &&
                g.diameter == pt.spec.diameter && g.rounds == pt.spec.rounds) {
                group = &g;
                break;
            }
        }
        if (group == nullptr) {
            groups.push_back(
                {pt.spec.kind, pt.spec.basis, pt.spec.diameter, pt.spec.rounds,
                 {}});
            group = &groups.back();
        }
        group->points.push_back(&pt);
    }
    const auto point_x = [](const CellPoint& pt) {
        return std::max(pt.pu, pt.pm);
    };
    const auto point_y = [](const CellPoint& pt) {
        return pt.errors > 0 ? pt.p_logical() : pt.region.hi;
    };
    for (SvgGroup& g : groups) {
        std::stable_sort(g.points.begin(), g.points.end(),
                         [&](const CellPoint* a, const CellPoint* b) {
                             return point_x(*a) < point_x(*b);
                         });
    }

    // Axis ranges: smallest/largest positive values, padded to full decades.
    double x_min = 0.0, x_max = 0.0, y_min = 0.0, y_max = 0.0;
    const auto fold = [](double& lo, double& hi, double v) {
        if (v <= 0.0) return;
        if (lo == 0.0 || v < lo) lo = v;
        if (v > hi) hi = v;
    };
    for (const CellPoint& pt : points) {
        fold(x_min, x_max, point_x(pt));
        fold(y_min, y_max, point_y(pt));
        fold(y_min, y_max, pt.region.lo);
        fold(y_min, y_max, pt.region.hi);
    }
    if (x_min == 0.0) {
        x_min = 1e-4;
        x_max = 1e-1;
    }
    if (y_min == 0.0) {
        y_min = 1e-6;
        y_max = 1.0;
    }
    int lx0 = static_cast<int>(std::floor(std::log10(x_min)));
    int lx1 = static_cast<int>(std::ceil(std::log10(x_max)));
    int ly0 = static_cast<int>(std::floor(std::log10(y_min)));
    int ly1 = static_cast<int>(std::ceil(std::log10(y_max)));
    if (lx1 <= lx0) lx1 = lx0 + 1;
    if (ly1 <= ly0) ly1 = ly0 + 1;

    const double width = 860.0, height = 600.0;
    const double ml = 80.0, mr = 30.0, mt = 30.0, mb = 60.0;
    const double pw = width - ml - mr;
    const double ph = height - mt - mb;
    const auto px = [&](double x) {
        const double lx = std::log10(std::max(x, std::pow(10.0, lx0)));
        return ml + (lx - lx0) / (lx1 - lx0) * pw;
    };
    const auto py = [&](double y) {
        double ly = std::log10(std::clamp(y, std::pow(10.0, ly0),
                                          std::pow(10.0, ly1)));
        return mt + (ly1 - ly) / (ly1 - ly0) * ph;
    };

    static const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                     "#9467bd", "#ff7f0e", "#8c564b",
                                     "#e377c2", "#17becf"};
    constexpr size_t kPaletteSize = sizeof(kPalette) / sizeof(kPalette[0]);

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" "
        << "width=\"" << svg_num(width) << "\" height=\"" << svg_num(height)
        << "\" viewBox=\"0 0 " << svg_num(width) << ' ' << svg_num(height)
        << "\">\n";
    out << "<rect x=\"0\" y=\"0\" width=\"" << svg_num(width) << "\" height=\""
        << svg_num(height) << "\" fill=\"#ffffff\"/>\n";

    // Decade grid lines and tick labels.
    for (int e = lx0; e <= lx1; ++e) {
        const double x = px(std::pow(10.0, e));
        out << "<line x1=\"" << svg_num(x) << "\" y1=\"" << svg_num(mt)
            << "\" x2=\"" << svg_num(x) << "\" y2=\"" << svg_num(mt + ph)
            << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
        out << "<text x=\"" << svg_num(x) << "\" y=\"" << svg_num(mt + ph + 20)
            << "\" font-family=\"sans-serif\" font-size=\"12\" "
               "text-anchor=\"middle\">"
            << decade_label(e) << "</text>\n";
    }
    for (int e = ly0; e <= ly1; ++e) {
        const double y = py(std::pow(10.0, e));
        out << "<line x1=\"" << svg_num(ml) << "\" y1=\"" << svg_num(y)
            << "\" x2=\"" << svg_num(ml + pw) << "\" y2=\"" << svg_num(y)
            << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
        out << "<text x=\"" << svg_num(ml - 8) << "\" y=\"" << svg_num(y + 4)
            << "\" font-family=\"sans-serif\" font-size=\"12\" "
               "text-anchor=\"end\">"
            << decade_label(e) << "</text>\n";
    }
    out << "<rect x=\"" << svg_num(ml) << "\" y=\"" << svg_num(mt)
        << "\" width=\"" << svg_num(pw) << "\" height=\"" << svg_num(ph)
        << "\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
    out << "<text x=\"" << svg_num(ml + pw / 2) << "\" y=\""
        << svg_num(height - 14)
        << "\" font-family=\"sans-serif\" font-size=\"14\" "
           "text-anchor=\"middle\">physical error rate (max of pu, pm)"
        << "</text>\n";
    out << "<text x=\"20\" y=\"" << svg_num(mt + ph / 2)
        << "\" font-family=\"sans-serif\" font-size=\"14\" "
           "text-anchor=\"middle\" transform=\"rotate(-90 20 "
        << svg_num(mt + ph / 2) << ")\">logical error rate per shot</text>\n";

    for (size_t gi = 0; gi < groups.size(); ++gi) {
        const SvgGroup& g = groups[gi];
        const char* color = kPalette[gi % kPaletteSize];
        const double y_floor = std::pow(10.0, ly0);

        // Shaded likelihood region: upper bounds forward, lower bounds back.
        out << "<polygon fill=\"" << color << "\" fill-opacity=\"0.22\" "
            << "stroke=\"" << color
            << "\" stroke-opacity=\"0.6\" stroke-width=\"1\" points=\"";
        for (const CellPoint* pt : g.points) {
            out << svg_num(px(point_x(*pt))) << ',' << svg_num(py(pt->region.hi))
                << ' ';
        }
        for (auto it = g.points.rbegin(); it != g.points.rend(); ++it) {
            const double lo = std::max((*it)->region.lo, y_floor);
            out << svg_num(px(point_x(**it))) << ',' << svg_num(py(lo));
            if (std::next(it) != g.points.rend()) out << ' ';
        }
        out << "\"/>\n";

        out << "<polyline fill=\"none\" stroke=\"" << color
            << "\" stroke-width=\"2\" points=\"";
        for (size_t i = 0; i < g.points.size(); ++i) {
            if (i) out << ' ';
            out << svg_num(px(point_x(*g.points[i]))) << ','
                << svg_num(py(point_y(*g.points[i])));
        }
        out << "\"/>\n";
        for (const CellPoint* pt : g.points) {
            out << "<circle cx=\"" << svg_num(px(point_x(*pt))) << "\" cy=\""
                << svg_num(py(point_y(*pt))) << "\" r=\"3.5\" fill=\"" << color
                << "\"/>\n";
        }

        // Legend entry.
        const double ly = mt + 14 + 18.0 * static_cast<double>(gi);
        out << "<rect x=\"" << svg_num(ml + 10) << "\" y=\"" << svg_num(ly - 9)
            << "\" width=\"11\" height=\"11\" fill=\"" << color << "\"/>\n";
        out << "<text x=\"" << svg_num(ml + 26) << "\" y=\"" << svg_num(ly + 1)
            << "\" font-family=\"sans-serif\" font-size=\"12\">"
            << kind_name(g.kind) << " b=" << basis_char(g.basis)
            << " d=" << g.diameter << " r=" << g.rounds << "</text>\n";
    }
    out << "</svg>\n";
}

}  // namespace qec
