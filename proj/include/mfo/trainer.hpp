#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "mfo/search_space.hpp"
#include "mfo/serial.hpp"

namespace mfo {

// Evaluation taken right after an epoch of training.
struct EpochReport {
    int epoch = 0;            // equals epochs_trained after the call
    double val_metric = 0.0;  // in [0, 1]
    double final_step_lr = 0.0;
};

// Opaque per-trial training state. Concrete trainers subclass this; the
// scheduler and runner only see the epoch/step counters.
class TrainerState {
public:
    virtual ~TrainerState() = default;

    int epochs_trained() const { return epochs_trained_; }
    int steps_per_epoch() const { return steps_per_epoch_; }

protected:
    friend class Trainer;
    int epochs_trained_ = 0;
    int steps_per_epoch_ = 1;
};

// Maps a step index within the current epoch to its learning rate.
using LrForStep = std::function<double(int)>;

// Trainer contract: construct a state from a configuration, advance it one
// epoch at a time, evaluate it, and move it across threads or runs as
// checkpoint bytes. Implementations must be deterministic in
// (config, seed, lr trace).
class Trainer {
public:
    virtual ~Trainer() = default;

    virtual std::unique_ptr<TrainerState> init(const Config& config, std::uint64_t seed) const = 0;

    // Consumes exactly steps_per_epoch learning-rate queries.
    virtual EpochReport train_epoch(TrainerState& state, const LrForStep& lr_for_step) const = 0;

    // Side-effect free.
    virtual double evaluate(const TrainerState& state) const = 0;

    virtual std::vector<std::uint8_t> checkpoint(const TrainerState& state) const = 0;
    virtual std::unique_ptr<TrainerState> restore(std::span<const std::uint8_t> blob) const = 0;

protected:
    static void set_counters(TrainerState& state, int epochs_trained, int steps_per_epoch) {
        state.epochs_trained_ = epochs_trained;
        state.steps_per_epoch_ = steps_per_epoch;
    }
    static void bump_epoch(TrainerState& state) { ++state.epochs_trained_; }
};

// Checkpoint framing: magic "MFT1", format version, trainer kind tag, and a
// length-prefixed payload.
namespace checkpoint {

constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kKindSurrogate = 1;
constexpr std::uint32_t kKindToySgd = 2;

inline std::vector<std::uint8_t> wrap(std::uint32_t kind, ByteWriter payload) {
    std::vector<std::uint8_t> body = payload.take();
    ByteWriter w;
    w.put_u8('M');
    w.put_u8('F');
    w.put_u8('T');
    w.put_u8('1');
    w.put_u32(kVersion);
    w.put_u32(kind);
    w.put_u64(body.size());
    std::vector<std::uint8_t> out = w.take();
    out.insert(out.end(), body.begin(), body.end());
    return out;
}

// Validates the frame and returns a reader positioned at the payload.
inline ByteReader open(std::span<const std::uint8_t> blob, std::uint32_t expected_kind) {
    if (blob.size() < 20) throw std::runtime_error("checkpoint: blob too short");
    if (blob[0] != 'M' || blob[1] != 'F' || blob[2] != 'T' || blob[3] != '1') {
        throw std::runtime_error("checkpoint: bad magic");
    }
    ByteReader header(blob.subspan(4, 16));
    const std::uint32_t version = header.get_u32();
    if (version != kVersion) {
        throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
    }
    const std::uint32_t kind = header.get_u32();
    if (kind != expected_kind) {
        throw std::runtime_error("checkpoint: trainer kind mismatch");
    }
    const std::uint64_t len = header.get_u64();
    if (len != blob.size() - 20) {
        throw std::runtime_error("checkpoint: payload length mismatch");
    }
    return ByteReader(blob.subspan(20));
}

}  // namespace checkpoint

}  // namespace mfo
