#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "qec/circuit.h"
#include "qec/noise.h"
#include "qec/rng.h"

namespace qec {

// Pauli frame sampling engine. A flattened noisy circuit is compiled once
// into a flat op stream plus a table of independent channel instances (one
// per channel target, or target pair for DEPOLARIZE2; one potential
// measurement flip per M target). Sampling then works shot-by-shot: each
// shot's fired instances are drawn from its own counter-based stream via
// geometric skipping, and the resulting sparse Pauli events are propagated
// through the op stream 64 shots at a time, one bit lane per shot.

struct Op {
    enum Kind : uint8_t { H, CZ, R, M, Chan } kind;
    uint32_t a = 0;    // qubit
    uint32_t b = 0;    // CZ partner
    uint32_t idx = 0;  // M: measurement index; Chan: channel instance id
};

struct ChannelInstance {
    ChannelKind kind;
    double p = 0.0;
    std::array<uint32_t, 2> qubits = {0, 0};
    uint32_t meas = 0;        // MErr: the record this instance may flip
    uint8_t num_effects = 1;  // non-identity effects (Dep1: 3, Dep2: 15)
};

// All instances sharing one (kind, probability): sampled together with one
// geometric-skip walk per shot.
struct SampleClass {
    ChannelKind kind;
    double p;
    GeometricSkip skip;
    std::vector<uint32_t> instances;  // ids, ascending
};

struct CompiledCircuit {
    uint32_t num_qubits = 0;
    uint32_t num_measurements = 0;
    uint64_t num_detectors = 0;
    uint32_t num_observables = 0;

    std::vector<Op> ops;
    std::vector<ChannelInstance> channels;  // id order == op-stream order
    std::vector<SampleClass> classes;

    // Detector/observable definitions as CSR lists of measurement indices.
    std::vector<uint64_t> det_offsets;  // size num_detectors + 1
    std::vector<uint32_t> det_meas;
    std::vector<uint64_t> obs_offsets;  // size num_observables + 1
    std::vector<uint32_t> obs_meas;

    // Flattened-instruction index -> this instruction's channel instances
    // (first id + count), or first == -1 when it has none. M instructions
    // always own one potential flip instance per target, so measurement
    // errors can be injected even into noiseless circuits.
    std::vector<int64_t> instr_first;
    std::vector<uint32_t> instr_count;

    size_t det_stride() const { return (num_detectors + 63) / 64; }
    size_t obs_stride() const { return (num_observables + 63) / 64; }
};

// Compiles a flattened circuit (noisy or ideal). Rejects REPEAT blocks.
CompiledCircuit compile_circuit(const Circuit& flat);

// One block of up to 64 shots' worth of sampled effects, as per-instance
// lane masks (bit s = shot lane s), ascending by instance id.
struct BlockEvents {
    struct Entry {
        uint32_t id = 0;
        uint64_t x0 = 0, z0 = 0;  // Pauli components on qubits[0]
        uint64_t x1 = 0, z1 = 0;  // and on qubits[1]
        uint64_t flip = 0;        // MErr record flips
    };
    std::vector<Entry> entries;

    // XORs one effect of one instance into the lane's masks. Entries must be
    // completed in ascending id order before run_block.
    void add(const CompiledCircuit& cc, uint32_t id, uint8_t effect,
             uint64_t lane_mask);
    void sort_and_merge();
};

// Propagates 64 lanes of Pauli frames through the op stream; records must
// hold num_measurements words and receives each record's flip mask.
void run_block(const CompiledCircuit& cc, const BlockEvents& ev,
               uint64_t* records);

// Reduces record flip masks to detector/observable flip masks.
void block_detectors(const CompiledCircuit& cc, const uint64_t* records,
                     uint64_t* det_words, uint64_t* obs_words);

// Draws shot `shot`'s fired (instance, effect) pairs in the deterministic
// class-by-class order, calling emit(instance_id, effect_code). Effect codes
// are 1-based: Dep1 1..3 (X,Y,Z), Dep2 1..15 (row-major IX..ZZ), XErr 1,
// ZErr 3, MErr 1.
template <typename Emit>
void sample_shot_events(const CompiledCircuit& cc, uint64_t seed,
                        uint64_t shot, Emit&& emit) {
    ShotRng rng(seed, shot);
    for (const SampleClass& cls : cc.classes) {
        if (cls.p <= 0.0) continue;
        uint64_t n = cls.instances.size();
        uint64_t i = cls.skip.draw(rng);
        while (i < n) {
            const ChannelInstance& ci = cc.channels[cls.instances[i]];
            uint8_t effect = 1;
            switch (ci.kind) {
                case ChannelKind::Dep1:
                    effect = static_cast<uint8_t>(1 + rng.below(3));
                    break;
                case ChannelKind::Dep2:
                    effect = static_cast<uint8_t>(1 + rng.below(15));
                    break;
                case ChannelKind::ZErr:
                    effect = 3;
                    break;
                case ChannelKind::XErr:
                case ChannelKind::MErr:
                    effect = 1;
                    break;
            }
            emit(cls.instances[i], effect);
            i += 1 + cls.skip.draw(rng);
        }
    }
}

struct DetectionData {
    uint64_t shots = 0;
    uint64_t num_detectors = 0;
    uint32_t num_observables = 0;
    uint64_t seed = 0;
    // Row-major per shot, bit k of word (row*stride + k/64).
    std::vector<uint64_t> det_bits;
    std::vector<uint64_t> obs_bits;

    size_t det_stride() const { return (num_detectors + 63) / 64; }
    size_t obs_stride() const { return (num_observables + 63) / 64; }
    bool det(uint64_t shot, uint64_t k) const {
        return (det_bits[shot * det_stride() + k / 64] >> (k % 64)) & 1;
    }
    bool obs(uint64_t shot, uint32_t k) const {
        return (obs_bits[shot * obs_stride() + k / 64] >> (k % 64)) & 1;
    }
    bool operator==(const DetectionData&) const = default;
};

// Number of parallel workers to use: `requested` if positive, else the
// QECSTAB_WORKERS environment variable, else all hardware threads.
int resolve_workers(int requested);

// Word-parallel sampler (OpenMP over 64-shot blocks). Shot indices are
// absolute (first_shot .. first_shot+shots-1) so a caller can stream slabs
// without changing any sampled value.
DetectionData sample_frames(const CompiledCircuit& cc, uint64_t shots,
                            uint64_t seed, int workers = 0,
                            uint64_t first_shot = 0);

// Plain per-shot scalar engine with bit-identical output; the reference the
// word-parallel kernel is tested and benchmarked against.
DetectionData sample_frames_reference(const CompiledCircuit& cc,
                                      uint64_t shots, uint64_t seed,
                                      uint64_t first_shot = 0);

DetectionData sample_frames(const Circuit& flat_noisy, uint64_t shots,
                            uint64_t seed, int workers = 0);

// One specific channel effect to force on: `instruction` indexes the
// flattened circuit, `slot` the target (pair for DEPOLARIZE2) within that
// instruction, `effect` the 1-based effect code as in sample_shot_events.
struct ErrorLocation {
    uint64_t instruction = 0;
    uint32_t slot = 0;
    uint8_t effect = 1;

    bool operator==(const ErrorLocation&) const = default;
};

struct Symptom {
    std::vector<uint8_t> detectors;
    std::vector<uint8_t> observables;
    bool operator==(const Symptom&) const = default;
};

// Deterministic single-trajectory propagation of exactly the given effects.
Symptom inject_errors(const CompiledCircuit& cc,
                      const std::vector<ErrorLocation>& errs);
Symptom inject_errors(const Circuit& flat, const std::vector<ErrorLocation>& errs);

// Translates an ErrorLocation to its channel instance id (validating kind,
// slot and effect ranges).
uint32_t resolve_error_location(const CompiledCircuit& cc,
                                const ErrorLocation& loc);

// `.dets` text: header "# detectors=<n> observables=<m> seed=<s>", then one
// "<det bits>:<obs bits>" line of 0/1 characters per shot.
void write_dets(const DetectionData& data, std::ostream& out);
DetectionData read_dets(std::istream& in);

}  // namespace qec
