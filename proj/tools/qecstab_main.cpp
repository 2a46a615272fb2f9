#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "qec/analysis.h"
#include "qec/circuit.h"
#include "qec/codegen.h"
#include "qec/decoder.h"
#include "qec/dem.h"
#include "qec/fmt.h"
#include "qec/frame_sim.h"
#include "qec/noise.h"

namespace {

using namespace qec;

// All randomness flows from --seed; this is its documented default.
constexpr uint64_t kDefaultSeed = 0x51EC57AB;

// Bad flag combinations: exit code 1. Anything thrown by the pipeline
// itself (unreadable/malformed inputs, inconsistent data): exit code 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
    std::ostringstream ss;
    if (path == "-") {
        ss << std::cin.rdbuf();
    } else {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw std::runtime_error("cannot open '" + path + "'");
        ss << in.rdbuf();
    }
    return ss.str();
}

// Output sink: a file path, or "-" for stdout.
class OutputFile {
  public:
    explicit OutputFile(const std::string& path) {
        if (path != "-") {
            file_.open(path, std::ios::binary);
            if (!file_) {
                throw std::runtime_error("cannot write '" + path + "'");
            }
            path_ = path;
        }
    }
    std::ostream& stream() { return path_.empty() ? std::cout : file_; }
    void finish() {
        stream().flush();
        if (!stream()) {
            throw std::runtime_error(
                path_.empty() ? "write failed" : "write failed for '" + path_ + "'");
        }
    }

  private:
    std::ofstream file_;
    std::string path_;
};

// Flags shared by the experiment-driven subcommands; names mirror the
// dataset filename keys (b, d, r, pd, pm), with long-form aliases.
struct ExpFlags {
    std::string type = "stability";
    std::string basis = "Z";
    uint32_t diameter = 4;
    uint32_t rounds = 25;
    double pu = 0.0;
    double pm = 0.0;
};

void add_exp_flags(CLI::App* cmd, ExpFlags& f, double default_p) {
    f.pu = default_p;
    f.pm = default_p;
    cmd->add_option("-t,--type", f.type, "experiment type: stability or memory")
        ->capture_default_str();
    cmd->add_option("--b,--basis", f.basis, "measurement basis: X or Z")
        ->capture_default_str();
    cmd->add_option("--d,--diameter", f.diameter,
                    "patch diameter in data qubits")
        ->capture_default_str();
    cmd->add_option("--r,--rounds", f.rounds, "stabilizer measurement rounds")
        ->capture_default_str();
    cmd->add_option("--pu,--pd", f.pu,
                    "unitary-layer depolarization probability")
        ->capture_default_str();
    cmd->add_option("--pm", f.pm, "measure/reset error probability")
        ->capture_default_str();
}

void check_probability(const char* name, double p) {
    if (!(p >= 0.0) || p >= 0.5) {
        throw UsageError(std::string(name) + " must be in [0, 0.5)");
    }
}

ExperimentSpec to_spec(const std::string& type, const std::string& basis,
                       uint32_t diameter, uint32_t rounds) {
    ExperimentSpec spec;
    if (type == "stability") {
        spec.kind = ExperimentKind::Stability;
    } else if (type == "memory") {
        spec.kind = ExperimentKind::Memory;
    } else {
        throw UsageError("unknown --type '" + type +
                         "' (expected stability or memory)");
    }
    if (basis == "X") {
        spec.basis = Basis::X;
    } else if (basis == "Z") {
        spec.basis = Basis::Z;
    } else {
        throw UsageError("unknown --basis '" + basis + "' (expected X or Z)");
    }
    if (diameter < 2) throw UsageError("--d must be at least 2");
    if (spec.kind == ExperimentKind::Stability && diameter % 2 != 0) {
        throw UsageError(
            "stability experiments need an even --d (odd patches have no "
            "single-boundary-type layout)");
    }
    if (rounds < 1) throw UsageError("--r must be at least 1");
    spec.diameter = diameter;
    spec.rounds = rounds;
    return spec;
}

Circuit build_noisy(const ExpFlags& f) {
    const ExperimentSpec spec = to_spec(f.type, f.basis, f.diameter, f.rounds);
    check_probability("--pu", f.pu);
    check_probability("--pm", f.pm);
    Circuit c = gen_circuit(spec);
    if (f.pu > 0.0 || f.pm > 0.0) {
        NoiseModel noise;
        noise.p_u = f.pu;
        noise.p_m = f.pm;
        c = apply_noise(c, noise);
    }
    return c;
}

struct GenOpts {
    ExpFlags exp;
    std::string out = "-";
    std::string dem_out;
};

int cmd_gen(const GenOpts& o) {
    const Circuit c = build_noisy(o.exp);
    OutputFile out(o.out);
    out.stream() << serialize_circuit(c);
    out.finish();
    if (!o.dem_out.empty()) {
        const DemExtraction dem = extract_dem_full(c);
        if (!dem.diagnostics.empty()) {
            std::cerr << "gen: " << dem.diagnostics.size()
                      << " mechanism(s) flip an observable without firing "
                         "any detector\n";
        }
        OutputFile dem_file(o.dem_out);
        write_dem(dem.mechanisms, dem_file.stream());
        dem_file.finish();
    }
    return 0;
}

struct SampleOpts {
    ExpFlags exp;
    std::string in;
    std::string out = "-";
    uint64_t shots = 1000;
    uint64_t seed = kDefaultSeed;
    int workers = 0;
};

int cmd_sample(const SampleOpts& o) {
    if (o.shots == 0) throw UsageError("--shots must be at least 1");
    Circuit noisy;
    if (!o.in.empty()) {
        noisy = parse_circuit(read_file(o.in));
    } else {
        noisy = build_noisy(o.exp);
    }
    const DetectionData data =
        sample_frames(flatten(noisy), o.shots, o.seed, o.workers);
    OutputFile out(o.out);
    write_dets(data, out.stream());
    out.finish();
    return 0;
}

struct DecodeOpts {
    std::string dem;
    std::string dets = "-";
    std::string out = "-";
    int workers = 0;
    bool apsp = false;
};

int cmd_decode(const DecodeOpts& o) {
    std::istringstream dem_in(read_file(o.dem));
    const std::vector<ErrorMechanism> mechs = read_dem(dem_in);
    std::istringstream dets_in(read_file(o.dets));
    const DetectionData data = read_dets(dets_in);
    const DecodingGraph graph = build_graph(mechs, data.num_detectors);
    std::unique_ptr<ApspTable> apsp;
    if (o.apsp) apsp = std::make_unique<ApspTable>(graph);
    const DecodeResult result = decode_batch(graph, data, o.workers, apsp.get());

    OutputFile out(o.out);
    std::string line(data.num_observables, '0');
    for (uint64_t s = 0; s < result.shots; ++s) {
        for (uint32_t k = 0; k < data.num_observables; ++k) {
            line[k] = ((result.predictions[s] >> k) & 1) ? '1' : '0';
        }
        out.stream() << line << '\n';
    }
    out.finish();
    std::cout << "shots=" << result.shots << " errors=" << result.errors
              << '\n';
    return 0;
}

struct RunCmdOpts {
    ExpFlags exp;
    uint64_t shots = 100000;
    uint64_t seed = kDefaultSeed;
    int workers = 0;
    bool apsp = false;
    double bound = 1000.0;
};

int cmd_run(const RunCmdOpts& o) {
    if (o.shots == 0) throw UsageError("--shots must be at least 1");
    if (!(o.bound > 1.0)) throw UsageError("--bound must be greater than 1");
    const ExperimentSpec spec =
        to_spec(o.exp.type, o.exp.basis, o.exp.diameter, o.exp.rounds);
    check_probability("--pu", o.exp.pu);
    check_probability("--pm", o.exp.pm);
    RunOptions opt;
    opt.workers = o.workers;
    opt.use_apsp = o.apsp;
    opt.bayes_bound = o.bound;
    const CellPoint pt =
        run_point(spec, o.exp.pu, o.exp.pm, o.shots, o.seed, opt);
    std::cout << "shots=" << pt.shots << " errors=" << pt.errors
              << " p_logical=" << fmt_double(pt.p_logical()) << " region=["
              << fmt_double(pt.region.lo) << ',' << fmt_double(pt.region.hi)
              << "]\n";
    return 0;
}

struct SweepOpts {
    std::string type = "stability";
    std::string basis = "Z";
    std::vector<uint32_t> diameters;
    std::vector<uint32_t> rounds;
    std::vector<double> p_both;
    std::vector<double> pu_list;
    std::vector<double> pm_list;
    uint64_t shots = 100000;
    uint64_t seed = kDefaultSeed;
    int workers = 0;
    bool apsp = false;
    double bound = 1000.0;
    std::string csv = "-";
    std::string svg;
};

int cmd_sweep(const SweepOpts& o) {
    if (o.shots == 0) throw UsageError("--shots must be at least 1");
    if (!(o.bound > 1.0)) throw UsageError("--bound must be greater than 1");
    std::vector<uint32_t> ds = o.diameters;
    std::vector<uint32_t> rs = o.rounds;
    if (ds.empty()) ds = {4};
    if (rs.empty()) rs = {5, 15, 25};
    std::vector<ExperimentSpec> specs;
    for (const uint32_t d : ds) {
        for (const uint32_t r : rs) {
            specs.push_back(to_spec(o.type, o.basis, d, r));
        }
    }
    std::vector<std::pair<double, double>> grid;
    if (!o.p_both.empty()) {
        if (!o.pu_list.empty() || !o.pm_list.empty()) {
            throw UsageError("--p cannot be combined with --pu/--pm lists");
        }
        for (const double p : o.p_both) {
            check_probability("--p", p);
            grid.emplace_back(p, p);
        }
    } else {
        std::vector<double> pus = o.pu_list.empty() ? std::vector<double>{0.001}
                                                    : o.pu_list;
        std::vector<double> pms = o.pm_list.empty() ? std::vector<double>{0.001}
                                                    : o.pm_list;
        for (const double pu : pus) {
            for (const double pm : pms) {
                check_probability("--pu", pu);
                check_probability("--pm", pm);
                grid.emplace_back(pu, pm);
            }
        }
    }
    RunOptions opt;
    opt.workers = o.workers;
    opt.use_apsp = o.apsp;
    opt.bayes_bound = o.bound;
    const SweepTable table = sweep(grid, specs, o.shots, o.seed, opt);

    std::vector<CellPoint> rows;
    for (const SweepCell& cell : table.cells) {
        rows.insert(rows.end(), cell.points.begin(), cell.points.end());
        if (cell.censored) {
            std::cerr << "sweep: cell pu=" << fmt_double(cell.pu)
                      << " pm=" << fmt_double(cell.pm)
                      << ": fewer than two points with observed errors; "
                         "no fit\n";
        } else {
            std::cerr << "sweep: cell pu=" << fmt_double(cell.pu)
                      << " pm=" << fmt_double(cell.pm) << " suppression_db="
                      << fmt_double(cell.fit.suppression_db) << '\n';
        }
    }
    OutputFile out(o.csv);
    emit_csv(rows, out.stream());
    out.finish();
    if (!o.svg.empty()) {
        OutputFile svg_file(o.svg);
        emit_svg(rows, svg_file.stream());
        svg_file.finish();
    }
    return 0;
}

struct AnalyzeOpts {
    std::string csv = "-";
};

int cmd_analyze(const AnalyzeOpts& o) {
    std::istringstream in(read_file(o.csv));
    const std::vector<CellPoint> points = read_csv(in);
    if (points.empty()) throw std::runtime_error("csv has no data rows");
    for (const GroupFit& g : fit_groups(points)) {
        std::cout << "type=" << kind_name(g.kind) << " b=" << basis_char(g.basis)
                  << " pu=" << fmt_double(g.pu) << " pm=" << fmt_double(g.pm)
                  << " points=" << g.points.size();
        if (g.censored) {
            std::cout << " censored\n";
        } else {
            std::cout << " slope=" << fmt_double(g.fit.slope)
                      << " intercept=" << fmt_double(g.fit.intercept)
                      << " suppression_db="
                      << fmt_double(g.fit.suppression_db) << '\n';
        }
    }
    return 0;
}

struct PlotOpts {
    std::string csv = "-";
    std::string out = "-";
};

int cmd_plot(const PlotOpts& o) {
    std::istringstream in(read_file(o.csv));
    const std::vector<CellPoint> points = read_csv(in);
    if (points.empty()) throw std::runtime_error("csv has no data rows");
    OutputFile out(o.out);
    emit_svg(points, out.stream());
    out.finish();
    return 0;
}

template <typename Fn>
int dispatch(const char* stage, Fn&& fn) {
    try {
        return fn();
    } catch (const UsageError& e) {
        std::cerr << stage << ": " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << stage << ": " << e.what() << '\n';
        return 2;
    }
}

void add_seed_flag(CLI::App* cmd, uint64_t& seed) {
    cmd->add_option("--seed", seed, "RNG seed (default 0x51EC57AB)")
        ->capture_default_str();
}

void add_workers_flag(CLI::App* cmd, int& workers) {
    cmd->add_option("--workers", workers,
                    "parallel workers (0 = QECSTAB_WORKERS env or all cores)")
        ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Surface-code stability/memory benchmarking pipeline: circuit "
        "generation, noise, frame sampling, DEM extraction, matching "
        "decoder, and rate analysis."};
    app.require_subcommand(1);

    GenOpts gen_opts;
    CLI::App* gen = app.add_subcommand(
        "gen", "generate an experiment circuit (canonical .stim text)");
    add_exp_flags(gen, gen_opts.exp, 0.0);
    gen->add_option("-o,--out", gen_opts.out, "output path ('-' = stdout)")
        ->capture_default_str();
    gen->add_option("--dem", gen_opts.dem_out,
                    "also write the extracted detector error model here");

    SampleOpts sample_opts;
    CLI::App* sample = app.add_subcommand(
        "sample", "sample detection events from a noisy circuit (.dets)");
    add_exp_flags(sample, sample_opts.exp, 0.001);
    sample->add_option("--in", sample_opts.in,
                       "sample this circuit file instead of generating one");
    sample->add_option("-o,--out", sample_opts.out, "output path ('-' = stdout)")
        ->capture_default_str();
    sample->add_option("--shots", sample_opts.shots, "number of shots")
        ->capture_default_str();
    add_seed_flag(sample, sample_opts.seed);
    add_workers_flag(sample, sample_opts.workers);

    DecodeOpts decode_opts;
    CLI::App* decode = app.add_subcommand(
        "decode", "decode detection events against a detector error model");
    decode->add_option("--dem", decode_opts.dem, "detector error model file")
        ->required();
    decode->add_option("--dets", decode_opts.dets,
                       "detection event file ('-' = stdin)")
        ->capture_default_str();
    decode->add_option("-o,--out", decode_opts.out,
                       "prediction output path ('-' = stdout)")
        ->capture_default_str();
    decode->add_flag("--apsp", decode_opts.apsp,
                     "precompute all-pairs distances (small graphs)");
    add_workers_flag(decode, decode_opts.workers);

    RunCmdOpts run_opts;
    CLI::App* run = app.add_subcommand(
        "run", "full pipeline for one configuration; prints the error rate");
    add_exp_flags(run, run_opts.exp, 0.001);
    run->add_option("--shots", run_opts.shots, "number of shots")
        ->capture_default_str();
    add_seed_flag(run, run_opts.seed);
    add_workers_flag(run, run_opts.workers);
    run->add_flag("--apsp", run_opts.apsp,
                  "precompute all-pairs distances (small graphs)");
    run->add_option("--bound", run_opts.bound,
                    "likelihood-ratio bound for the reported region")
        ->capture_default_str();

    SweepOpts sweep_opts;
    CLI::App* sweep_cmd = app.add_subcommand(
        "sweep", "run a noise-rate grid across code distances; writes CSV");
    sweep_cmd
        ->add_option("-t,--type", sweep_opts.type,
                     "experiment type: stability or memory")
        ->capture_default_str();
    sweep_cmd->add_option("--b,--basis", sweep_opts.basis, "basis: X or Z")
        ->capture_default_str();
    sweep_cmd
        ->add_option("--d,--diameter", sweep_opts.diameters,
                     "patch diameters (default 4)")
        ->delimiter(',');
    sweep_cmd
        ->add_option("--r,--rounds", sweep_opts.rounds,
                     "round counts (default 5,15,25)")
        ->delimiter(',');
    sweep_cmd
        ->add_option("--p", sweep_opts.p_both,
                     "noise rates applied to both pu and pm")
        ->delimiter(',');
    sweep_cmd
        ->add_option("--pu,--pd", sweep_opts.pu_list,
                     "unitary-layer rates (grid axis, default 0.001)")
        ->delimiter(',');
    sweep_cmd
        ->add_option("--pm", sweep_opts.pm_list,
                     "measure/reset rates (grid axis, default 0.001)")
        ->delimiter(',');
    sweep_cmd->add_option("--shots", sweep_opts.shots, "shots per point")
        ->capture_default_str();
    add_seed_flag(sweep_cmd, sweep_opts.seed);
    add_workers_flag(sweep_cmd, sweep_opts.workers);
    sweep_cmd->add_flag("--apsp", sweep_opts.apsp,
                        "precompute all-pairs distances (small graphs)");
    sweep_cmd
        ->add_option("--bound", sweep_opts.bound,
                     "likelihood-ratio bound for the reported regions")
        ->capture_default_str();
    sweep_cmd->add_option("--csv", sweep_opts.csv, "CSV output ('-' = stdout)")
        ->capture_default_str();
    sweep_cmd->add_option("--svg", sweep_opts.svg, "also plot to this SVG file");

    AnalyzeOpts analyze_opts;
    CLI::App* analyze = app.add_subcommand(
        "analyze", "fit error-suppression slopes from a sweep CSV");
    analyze
        ->add_option("--csv", analyze_opts.csv, "CSV input ('-' = stdin)")
        ->capture_default_str();

    PlotOpts plot_opts;
    CLI::App* plot =
        app.add_subcommand("plot", "render a sweep CSV as a log-log SVG plot");
    plot->add_option("--csv", plot_opts.csv, "CSV input ('-' = stdin)")
        ->capture_default_str();
    plot->add_option("-o,--out", plot_opts.out, "SVG output ('-' = stdout)")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    if (gen->parsed()) return dispatch("gen", [&] { return cmd_gen(gen_opts); });
    if (sample->parsed()) {
        return dispatch("sample", [&] { return cmd_sample(sample_opts); });
    }
    if (decode->parsed()) {
        return dispatch("decode", [&] { return cmd_decode(decode_opts); });
    }
    if (run->parsed()) return dispatch("run", [&] { return cmd_run(run_opts); });
    if (sweep_cmd->parsed()) {
        return dispatch("sweep", [&] { return cmd_sweep(sweep_opts); });
    }
    if (analyze->parsed()) {
        return dispatch("analyze", [&] { return cmd_analyze(analyze_opts); });
    }
    if (plot->parsed()) {
        return dispatch("plot", [&] { return cmd_plot(plot_opts); });
    }
    return 1;
}
