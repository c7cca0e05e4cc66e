#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "mfo/rng.hpp"
#include "mfo/trainer.hpp"

namespace mfo {

// Momentum SGD update: v <- mu * v - lr * (g + wd * theta); theta <- theta + v.
inline void momentum_sgd_step(std::span<double> theta, std::span<double> velocity,
                              std::span<const double> grad, double lr, double mu,
                              double weight_decay) {
    for (std::size_t i = 0; i < theta.size(); ++i) {
        velocity[i] = mu * velocity[i] - lr * (grad[i] + weight_decay * theta[i]);
        theta[i] += velocity[i];
    }
}

// Four seeded Gaussian blobs in the plane, one per class; linearly separable
// by construction. First n_train points are the training split, the rest are
// held out for evaluation.
struct BlobDataset {
    std::vector<std::array<double, 2>> points;
    std::vector<int> labels;
    int n_train = 0;

    int n_holdout() const { return static_cast<int>(points.size()) - n_train; }

    static BlobDataset make(std::uint64_t seed, int n_total = 2000, int n_holdout = 500,
                            double spread = 0.6) {
        if (n_holdout >= n_total) throw std::invalid_argument("blobs: holdout >= total");
        static constexpr std::array<std::array<double, 2>, 4> centers = {
            {{3.0, 3.0}, {-3.0, 3.0}, {-3.0, -3.0}, {3.0, -3.0}}};
        BlobDataset data;
        data.points.reserve(n_total);
        data.labels.reserve(n_total);
        data.n_train = n_total - n_holdout;
        RandomStream rng(derive_seed(seed, {key_of("blob-dataset")}));
        for (int i = 0; i < n_total; ++i) {
            const int cls = i % 4;
            data.points.push_back({centers[cls][0] + spread * rng.gaussian(),
                                   centers[cls][1] + spread * rng.gaussian()});
            data.labels.push_back(cls);
        }
        return data;
    }
};

namespace toy_detail {

constexpr int kInputDim = 2;
constexpr int kHiddenDim = 8;
constexpr int kNumClasses = 4;
// Flat layout: W1 (8x2), b1 (8), W2 (4x8), b2 (4).
constexpr int kW1 = 0;
constexpr int kB1 = kW1 + kHiddenDim * kInputDim;
constexpr int kW2 = kB1 + kHiddenDim;
constexpr int kB2 = kW2 + kNumClasses * kHiddenDim;
constexpr int kNumParams = kB2 + kNumClasses;

inline void forward(std::span<const double> p, const std::array<double, 2>& x,
                    std::array<double, kHiddenDim>& hidden, std::array<double, kNumClasses>& logits) {
    for (int i = 0; i < kHiddenDim; ++i) {
        double z = p[kB1 + i];
        for (int j = 0; j < kInputDim; ++j) z += p[kW1 + i * kInputDim + j] * x[j];
        hidden[i] = std::tanh(z);
    }
    for (int c = 0; c < kNumClasses; ++c) {
        double z = p[kB2 + c];
        for (int i = 0; i < kHiddenDim; ++i) z += p[kW2 + c * kHiddenDim + i] * hidden[i];
        logits[c] = z;
    }
}

inline void softmax(std::array<double, kNumClasses>& v) {
    const double mx = *std::max_element(v.begin(), v.end());
    double sum = 0.0;
    for (double& x : v) {
        x = std::exp(x - mx);
        sum += x;
    }
    for (double& x : v) x /= sum;
}

}  // namespace toy_detail

class ToySgdState final : public TrainerState {
public:
    const std::vector<double>& params() const { return params_; }
    const std::vector<double>& velocity() const { return velocity_; }
    bool diverged() const { return diverged_; }

private:
    friend class ToySgdTrainer;
    std::vector<double> params_;
    std::vector<double> velocity_;
    double mu = 0.0;           // momentum coefficient 1 - m
    double weight_decay = 0.0;
    int batch_size = 1;
    bool diverged_ = false;
    double last_lr_ = 0.0;
    std::uint64_t stream_seed_ = 0;  // keys per-epoch shuffles
};

// A real, miniature SGD trainer: two-layer perceptron with softmax
// cross-entropy on the blob dataset. Small enough for sub-second epochs,
// real enough to exercise every trainer contract end to end.
class ToySgdTrainer final : public Trainer {
public:
    explicit ToySgdTrainer(BlobDataset data) : data_(std::move(data)) {}

    const BlobDataset& data() const { return data_; }

    std::unique_ptr<TrainerState> init(const Config& config, std::uint64_t seed) const override {
        const double m = config.get("m");
        const double wd = config.get("w");
        const auto batch = static_cast<int>(config.get("b"));
        config.get("l");  // required dimension, consumed by the schedule
        if (batch < 1) throw std::invalid_argument("toy sgd: batch size must be >= 1");

        auto state = std::make_unique<ToySgdState>();
        state->mu = 1.0 - m;
        state->weight_decay = wd;
        state->batch_size = batch;
        state->stream_seed_ = seed;
        state->params_.resize(toy_detail::kNumParams);
        state->velocity_.assign(toy_detail::kNumParams, 0.0);
        RandomStream rng(derive_seed(seed, {key_of("toy-init")}));
        for (double& p : state->params_) p = rng.uniform(-0.3, 0.3);
        const int steps = (data_.n_train + batch - 1) / batch;
        set_counters(*state, 0, steps);
        return state;
    }

    EpochReport train_epoch(TrainerState& state, const LrForStep& lr_for_step) const override {
        auto& s = downcast(state);
        const int steps = s.steps_per_epoch();

        // Seeded reshuffle each epoch, keyed so checkpoint/restore replays it.
        std::vector<int> order(data_.n_train);
        std::iota(order.begin(), order.end(), 0);
        RandomStream shuffle(derive_seed(s.stream_seed_,
                                         {key_of("toy-shuffle"),
                                          static_cast<std::uint64_t>(s.epochs_trained())}));
        for (int i = data_.n_train - 1; i > 0; --i) {
            const auto j = static_cast<int>(shuffle.uniform_int(0, i));
            std::swap(order[i], order[j]);
        }

        std::vector<double> grad(toy_detail::kNumParams);
        for (int k = 0; k < steps; ++k) {
            const double lr = lr_for_step(k);
            if (!std::isfinite(lr)) throw std::invalid_argument("train_epoch: non-finite lr");
            s.last_lr_ = lr;
            if (s.diverged_) continue;  // still consume the lr queries

            const int begin = k * s.batch_size;
            const int end = std::min(data_.n_train, begin + s.batch_size);
            if (begin >= end) continue;
            if (!minibatch_gradient(s.params_, order, begin, end, grad)) {
                s.diverged_ = true;
                continue;
            }
            momentum_sgd_step(s.params_, s.velocity_, grad, lr, s.mu, s.weight_decay);
            for (double p : s.params_) {
                if (!std::isfinite(p)) {
                    s.diverged_ = true;
                    break;
                }
            }
        }
        bump_epoch(s);
        EpochReport report;
        report.epoch = s.epochs_trained();
        report.val_metric = evaluate(s);
        report.final_step_lr = s.last_lr_;
        return report;
    }

    // Held-out classification accuracy; a diverged state scores 0.
    double evaluate(const TrainerState& state) const override {
        const auto& s = downcast(state);
        if (s.diverged_) return 0.0;
        int correct = 0;
        std::array<double, toy_detail::kHiddenDim> hidden{};
        std::array<double, toy_detail::kNumClasses> logits{};
        for (std::size_t i = data_.n_train; i < data_.points.size(); ++i) {
            toy_detail::forward(s.params_, data_.points[i], hidden, logits);
            const int pred = static_cast<int>(
                std::max_element(logits.begin(), logits.end()) - logits.begin());
            if (pred == data_.labels[i]) ++correct;
        }
        return static_cast<double>(correct) / static_cast<double>(data_.n_holdout());
    }

    std::vector<std::uint8_t> checkpoint(const TrainerState& state) const override {
        const auto& s = downcast(state);
        ByteWriter w;
        w.put_f64_vec(s.params_);
        w.put_f64_vec(s.velocity_);
        w.put_f64(s.mu);
        w.put_f64(s.weight_decay);
        w.put_i64(s.batch_size);
        w.put_u8(s.diverged_ ? 1 : 0);
        w.put_f64(s.last_lr_);
        w.put_u64(s.stream_seed_);
        w.put_i64(s.epochs_trained());
        w.put_i64(s.steps_per_epoch());
        return checkpoint::wrap(checkpoint::kKindToySgd, std::move(w));
    }

    std::unique_ptr<TrainerState> restore(std::span<const std::uint8_t> blob) const override {
        ByteReader r = checkpoint::open(blob, checkpoint::kKindToySgd);
        auto state = std::make_unique<ToySgdState>();
        state->params_ = r.get_f64_vec();
        state->velocity_ = r.get_f64_vec();
        state->mu = r.get_f64();
        state->weight_decay = r.get_f64();
        state->batch_size = static_cast<int>(r.get_i64());
        state->diverged_ = r.get_u8() != 0;
        state->last_lr_ = r.get_f64();
        state->stream_seed_ = r.get_u64();
        const auto epochs = static_cast<int>(r.get_i64());
        const auto steps = static_cast<int>(r.get_i64());
        r.expect_exhausted();
        if (state->params_.size() != toy_detail::kNumParams ||
            state->velocity_.size() != toy_detail::kNumParams) {
            throw std::runtime_error("checkpoint: parameter count mismatch");
        }
        set_counters(*state, epochs, steps);
        return state;
    }

private:
    // Mean cross-entropy gradient over one minibatch; false if the loss or
    // activations went non-finite.
    bool minibatch_gradient(const std::vector<double>& params, const std::vector<int>& order,
                            int begin, int end, std::vector<double>& grad) const {
        std::fill(grad.begin(), grad.end(), 0.0);
        std::array<double, toy_detail::kHiddenDim> hidden{};
        std::array<double, toy_detail::kNumClasses> probs{};
        const double inv = 1.0 / static_cast<double>(end - begin);
        for (int idx = begin; idx < end; ++idx) {
            const auto& x = data_.points[order[idx]];
            const int y = data_.labels[order[idx]];
            toy_detail::forward(params, x, hidden, probs);
            toy_detail::softmax(probs);
            // probs[y] == 0 means the cross-entropy loss is +inf.
            if (!std::isfinite(probs[y]) || probs[y] <= 0.0) return false;
            for (int c = 0; c < toy_detail::kNumClasses; ++c) {
                const double dz2 = (probs[c] - (c == y ? 1.0 : 0.0)) * inv;
                grad[toy_detail::kB2 + c] += dz2;
                for (int i = 0; i < toy_detail::kHiddenDim; ++i) {
                    grad[toy_detail::kW2 + c * toy_detail::kHiddenDim + i] += dz2 * hidden[i];
                }
            }
            for (int i = 0; i < toy_detail::kHiddenDim; ++i) {
                double dh = 0.0;
                for (int c = 0; c < toy_detail::kNumClasses; ++c) {
                    dh += params[toy_detail::kW2 + c * toy_detail::kHiddenDim + i] *
                          (probs[c] - (c == data_.labels[order[idx]] ? 1.0 : 0.0)) * inv;
                }
                const double dz1 = dh * (1.0 - hidden[i] * hidden[i]);
                grad[toy_detail::kB1 + i] += dz1;
                for (int j = 0; j < toy_detail::kInputDim; ++j) {
                    grad[toy_detail::kW1 + i * toy_detail::kInputDim + j] += dz1 * x[j];
                }
            }
        }
        return true;
    }

    static ToySgdState& downcast(TrainerState& s) { return dynamic_cast<ToySgdState&>(s); }
    static const ToySgdState& downcast(const TrainerState& s) {
        return dynamic_cast<const ToySgdState&>(s);
    }

    BlobDataset data_;
};

}  // namespace mfo
