#include <chrono>
#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "qec/codegen.h"
#include "qec/fmt.h"
#include "qec/frame_sim.h"
#include "qec/noise.h"

// Benchmarks the word-parallel OpenMP sampling kernel against the serial
// per-shot reference on one circuit, and verifies their outputs match
// bit for bit. Exits nonzero on any mismatch.

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
}

}  // namespace

int main(int argc, char** argv) {
    using namespace qec;

    CLI::App app{
        "sampling benchmark: serial reference vs word-parallel kernel"};
    std::string type = "stability";
    std::string basis = "Z";
    uint32_t diameter = 4;
    uint32_t rounds = 25;
    double p = 0.001;
    uint64_t shots = 1 << 17;
    uint64_t seed = 1;
    int workers = 0;
    app.add_option("-t,--type", type, "stability or memory")
        ->capture_default_str();
    app.add_option("--b,--basis", basis, "X or Z")->capture_default_str();
    app.add_option("--d,--diameter", diameter, "patch diameter")
        ->capture_default_str();
    app.add_option("--r,--rounds", rounds, "rounds")->capture_default_str();
    app.add_option("--p", p, "noise rate for both pu and pm")
        ->capture_default_str();
    app.add_option("--shots", shots, "shots per engine")->capture_default_str();
    app.add_option("--seed", seed, "RNG seed")->capture_default_str();
    app.add_option("--workers", workers, "parallel workers (0 = auto)")
        ->capture_default_str();
    CLI11_PARSE(app, argc, argv);

    ExperimentSpec spec;
    spec.kind = type == "memory" ? ExperimentKind::Memory
                                 : ExperimentKind::Stability;
    spec.basis = basis == "X" ? Basis::X : Basis::Z;
    spec.diameter = diameter;
    spec.rounds = rounds;
    NoiseModel noise;
    noise.p_u = p;
    noise.p_m = p;
    const CompiledCircuit cc =
        compile_circuit(flatten(apply_noise(gen_circuit(spec), noise)));

    std::cout << "circuit: type=" << kind_name(spec.kind)
              << " b=" << basis_char(spec.basis) << " d=" << spec.diameter
              << " r=" << spec.rounds << " p=" << fmt_double(p)
              << " qubits=" << cc.num_qubits
              << " measurements=" << cc.num_measurements
              << " detectors=" << cc.num_detectors << '\n';

    auto t0 = std::chrono::steady_clock::now();
    const DetectionData reference = sample_frames_reference(cc, shots, seed);
    const double t_ref = seconds_since(t0);

    const int resolved = resolve_workers(workers);
    t0 = std::chrono::steady_clock::now();
    const DetectionData parallel = sample_frames(cc, shots, seed, workers);
    const double t_par = seconds_since(t0);

    std::cout << "reference: " << shots << " shots in "
              << fmt_double_sig(t_ref, 4) << " s ("
              << fmt_double_sig(static_cast<double>(shots) / t_ref, 4)
              << " shots/s)\n";
    std::cout << "parallel (" << resolved << " worker"
              << (resolved == 1 ? "" : "s") << "): " << shots << " shots in "
              << fmt_double_sig(t_par, 4) << " s ("
              << fmt_double_sig(static_cast<double>(shots) / t_par, 4)
              << " shots/s)\n";
    std::cout << "speedup: " << fmt_double_sig(t_ref / t_par, 4) << "x\n";

    if (reference == parallel) {
        std::cout << "outputs identical: yes\n";
        return 0;
    }
    std::cout << "outputs identical: NO\n";
    return 1;
}
