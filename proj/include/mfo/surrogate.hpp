#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <stdexcept>

#include "mfo/rng.hpp"
#include "mfo/trainer.hpp"

namespace mfo {

// Knobs of the slow-starter surrogate. Defaults are tuned so a full-length
// run approaches the asymptote and mid-schedule transients matter for
// ranking; experiment configs may override any of them.
struct SurrogateParams {
    double a_min = 0.05;
    double a_max = 0.75;
    double kappa = 5.0;        // progress-to-metric rate
    double beta = 0.3;         // transient penalty strength, in [0, 1]
    double sigma_l = 0.5;      // log-space width of the optimum in l
    double sigma_w = 1.0;      // log-space width of the optimum in w
    double sigma_noise = 0.002;
    double chance_level = 0.01;
    int steps_per_epoch = 10;
    int horizon_epochs = 164;  // r; one full training at this length ~ asymptote
    double l_ref = 0.0;        // reference rate for progress/penalty; 0 = hidden optimum
    double lstar_lo = 1e-3;    // hidden-optimum draw range for l
    double lstar_hi = 1.0;
    double wstar_lo = 1e-5;    // hidden-optimum draw range for w
    double wstar_hi = 1e-1;

    void validate() const {
        if (!(a_min < a_max) || !(a_min > 0.0) || !(a_max < 1.0)) {
            throw std::invalid_argument("surrogate: need 0 < a_min < a_max < 1");
        }
        if (!(kappa > 0.0)) throw std::invalid_argument("surrogate: kappa must be positive");
        if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("surrogate: beta in [0, 1]");
        if (!(sigma_l > 0.0 && sigma_w > 0.0)) throw std::invalid_argument("surrogate: widths > 0");
        if (sigma_noise < 0.0) throw std::invalid_argument("surrogate: sigma_noise >= 0");
        if (steps_per_epoch < 1) throw std::invalid_argument("surrogate: steps_per_epoch >= 1");
        if (horizon_epochs < 1) throw std::invalid_argument("surrogate: horizon_epochs >= 1");
    }
};

// Per-step progress gain as a function of x = lr / l_ref; peaks at exactly
// 1 when the step is taken at the reference rate.
inline double progress_gain(double x) {
    return x * std::exp(1.0 - x);
}

// One hidden task instance: the optimum location is drawn from the task
// seed, everything else comes from the params.
class SurrogateTask {
public:
    SurrogateTask(std::uint64_t task_seed, SurrogateParams params)
        : params_(params), task_seed_(task_seed) {
        params_.validate();
        RandomStream rng(derive_seed(task_seed, {key_of("surrogate-task")}));
        log_lstar_ = rng.uniform(std::log(params_.lstar_lo), std::log(params_.lstar_hi));
        log_wstar_ = rng.uniform(std::log(params_.wstar_lo), std::log(params_.wstar_hi));
        l_ref_ = params_.l_ref > 0.0 ? params_.l_ref : std::exp(log_lstar_);
    }

    const SurrogateParams& params() const { return params_; }
    std::uint64_t seed() const { return task_seed_; }
    double log_lstar() const { return log_lstar_; }
    double log_wstar() const { return log_wstar_; }
    double l_ref() const { return l_ref_; }

    // True asymptotic quality of a configuration; the quantity the
    // schedulers are implicitly trying to maximize.
    double true_asymptote(const Config& config) const {
        const double dl = std::log(config.get("l")) - log_lstar_;
        const double dw = std::log(config.get("w")) - log_wstar_;
        const double q = std::exp(-dl * dl / (2.0 * params_.sigma_l * params_.sigma_l) -
                                  dw * dw / (2.0 * params_.sigma_w * params_.sigma_w));
        return params_.a_min + (params_.a_max - params_.a_min) * q;
    }

private:
    SurrogateParams params_;
    std::uint64_t task_seed_;
    double log_lstar_ = 0.0;
    double log_wstar_ = 0.0;
    double l_ref_ = 0.0;
};

class SurrogateState final : public TrainerState {
public:
    double asymptote() const { return asymptote_; }
    double progress() const { return progress_; }
    double last_lr() const { return last_lr_; }

private:
    friend class SurrogateTrainer;
    double asymptote_ = 0.0;
    double progress_ = 0.0;  // accumulated training progress U
    double last_lr_ = 0.0;
    std::uint64_t noise_seed_ = 0;
};

// LR-aware surrogate trainer. Progress accrues fastest at the reference
// rate; the observed metric is suppressed while the most recent step's rate
// is still high, which is what makes early rungs misrank under
// full-strength schedules and rank truthfully at recurring-cycle ends.
class SurrogateTrainer final : public Trainer {
public:
    explicit SurrogateTrainer(SurrogateTask task) : task_(std::move(task)) {}

    const SurrogateTask& task() const { return task_; }

    std::unique_ptr<TrainerState> init(const Config& config, std::uint64_t seed) const override {
        auto state = std::make_unique<SurrogateState>();
        state->asymptote_ = task_.true_asymptote(config);  // throws if l or w missing
        state->noise_seed_ = seed;
        set_counters(*state, 0, task_.params().steps_per_epoch);
        return state;
    }

    EpochReport train_epoch(TrainerState& state, const LrForStep& lr_for_step) const override {
        auto& s = downcast(state);
        const int steps = s.steps_per_epoch();
        const double denom =
            static_cast<double>(task_.params().horizon_epochs) * static_cast<double>(steps);
        for (int k = 0; k < steps; ++k) {
            const double lr = lr_for_step(k);
            if (!std::isfinite(lr)) throw std::invalid_argument("train_epoch: non-finite lr");
            s.progress_ += progress_gain(lr / task_.l_ref()) / denom;
            s.last_lr_ = lr;
        }
        bump_epoch(s);
        EpochReport report;
        report.epoch = s.epochs_trained();
        report.val_metric = evaluate(s);
        report.final_step_lr = s.last_lr_;
        return report;
    }

    double evaluate(const TrainerState& state) const override {
        const auto& s = downcast(state);
        const SurrogateParams& p = task_.params();
        const double transient = 1.0 - p.beta * std::min(1.0, s.last_lr_ / task_.l_ref());
        const double base = s.asymptote_ * (1.0 - std::exp(-p.kappa * s.progress_)) * transient;
        RandomStream noise(derive_seed(s.noise_seed_,
                                       {key_of("surrogate-eval"),
                                        static_cast<std::uint64_t>(s.epochs_trained())}));
        const double eps = p.sigma_noise * noise.gaussian();
        return std::clamp(base + eps, p.chance_level, 1.0);
    }

    std::vector<std::uint8_t> checkpoint(const TrainerState& state) const override {
        const auto& s = downcast(state);
        ByteWriter w;
        w.put_f64(s.asymptote_);
        w.put_f64(s.progress_);
        w.put_f64(s.last_lr_);
        w.put_u64(s.noise_seed_);
        w.put_i64(s.epochs_trained());
        w.put_i64(s.steps_per_epoch());
        return checkpoint::wrap(checkpoint::kKindSurrogate, std::move(w));
    }

    std::unique_ptr<TrainerState> restore(std::span<const std::uint8_t> blob) const override {
        ByteReader r = checkpoint::open(blob, checkpoint::kKindSurrogate);
        auto state = std::make_unique<SurrogateState>();
        state->asymptote_ = r.get_f64();
        state->progress_ = r.get_f64();
        state->last_lr_ = r.get_f64();
        state->noise_seed_ = r.get_u64();
        const auto epochs = static_cast<int>(r.get_i64());
        const auto steps = static_cast<int>(r.get_i64());
        r.expect_exhausted();
        set_counters(*state, epochs, steps);
        return state;
    }

private:
    static SurrogateState& downcast(TrainerState& s) { return dynamic_cast<SurrogateState&>(s); }
    static const SurrogateState& downcast(const TrainerState& s) {
        return dynamic_cast<const SurrogateState&>(s);
    }

    SurrogateTask task_;
};

}  // namespace mfo
