#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfo {

// One promotion round: exponent s and the inclusive epoch interval it covers.
struct RoundBoundary {
    int s = 0;
    int e_start = 1;
    int e_end = 1;

    int epochs() const { return e_end - e_start + 1; }
    bool operator==(const RoundBoundary&) const = default;
};

namespace detail {

// Largest s with eta^s <= r, in exact integer arithmetic.
inline int floor_log(int eta, int r) {
    int s = 0;
    std::int64_t p = 1;
    while (p * eta <= r) {
        p *= eta;
        ++s;
    }
    return s;
}

inline std::int64_t ipow(int base, int exp) {
    std::int64_t p = 1;
    for (int i = 0; i < exp; ++i) p *= base;
    return p;
}

}  // namespace detail

// Round intervals for a halving plan: s runs from s_min to floor(log_eta r);
// each round starts one epoch after the previous power eta^(s-1) and ends at
// eta^s, except the last round which ends at r. The intervals tile [1, r].
inline std::vector<RoundBoundary> round_boundaries(int eta, int s_min, int r) {
    if (eta < 2) throw std::invalid_argument("round_boundaries: eta must be >= 2");
    if (s_min < 0) throw std::invalid_argument("round_boundaries: s_min must be >= 0");
    if (r < 1) throw std::invalid_argument("round_boundaries: r must be >= 1");
    if (detail::ipow(eta, s_min) > r) {
        throw std::invalid_argument("round_boundaries: eta^s_min exceeds r, no valid plan");
    }
    const int s_max = detail::floor_log(eta, r);
    std::vector<RoundBoundary> out;
    for (int s = s_min; s <= s_max; ++s) {
        RoundBoundary b;
        b.s = s;
        b.e_start = (s == s_min) ? 1 : static_cast<int>(detail::ipow(eta, s - 1)) + 1;
        b.e_end = (s == s_max) ? r : static_cast<int>(detail::ipow(eta, s));
        out.push_back(b);
    }
    return out;
}

enum class ScheduleKind {
    kCosineRecurring,
    kStepCondensed,
    kCyclicalTriangular,
    kLinearRecurring,
    kFullHorizonCosine,
    kFullHorizonStep,
};

inline bool is_recurring(ScheduleKind kind) {
    return kind == ScheduleKind::kCosineRecurring || kind == ScheduleKind::kStepCondensed ||
           kind == ScheduleKind::kCyclicalTriangular || kind == ScheduleKind::kLinearRecurring;
}

inline std::string schedule_kind_name(ScheduleKind kind) {
    switch (kind) {
        case ScheduleKind::kCosineRecurring: return "cosine_recurring";
        case ScheduleKind::kStepCondensed: return "step_condensed";
        case ScheduleKind::kCyclicalTriangular: return "cyclical_triangular";
        case ScheduleKind::kLinearRecurring: return "linear_recurring";
        case ScheduleKind::kFullHorizonCosine: return "full_horizon_cosine";
        case ScheduleKind::kFullHorizonStep: return "full_horizon_step";
    }
    return "?";
}

inline ScheduleKind schedule_kind_from_name(const std::string& name) {
    if (name == "cosine_recurring") return ScheduleKind::kCosineRecurring;
    if (name == "step_condensed") return ScheduleKind::kStepCondensed;
    if (name == "cyclical_triangular") return ScheduleKind::kCyclicalTriangular;
    if (name == "linear_recurring") return ScheduleKind::kLinearRecurring;
    if (name == "full_horizon_cosine") return ScheduleKind::kFullHorizonCosine;
    if (name == "full_horizon_step") return ScheduleKind::kFullHorizonStep;
    throw std::invalid_argument("unknown schedule kind: " + name);
}

// Milestone fractions of the 164-epoch baseline step schedule (decay at
// epochs 81 and 122).
inline std::vector<double> baseline_step_fractions() {
    return {81.0 / 164.0, 122.0 / 164.0};
}

// Schedule description. Recurring kinds are condensed into each promotion
// round and restarted; full-horizon kinds ignore round cycles and follow the
// global epoch position over [1, horizon_epochs].
struct LrSchedule {
    ScheduleKind kind = ScheduleKind::kCosineRecurring;
    double init_lr = 0.1;

    std::vector<double> milestone_fractions = baseline_step_fractions();  // kStepCondensed
    double factor = 0.1;                                                  // step kinds
    double floor_fraction = 0.0;                                          // kCyclicalTriangular
    std::vector<int> milestone_epochs;                                    // kFullHorizonStep
    int horizon_epochs = 0;                                               // full-horizon kinds

    void validate() const {
        if (!(init_lr > 0.0) || !std::isfinite(init_lr)) {
            throw std::invalid_argument("schedule: init_lr must be positive and finite");
        }
        if (kind == ScheduleKind::kStepCondensed || kind == ScheduleKind::kFullHorizonStep) {
            if (!(factor > 0.0 && factor < 1.0)) {
                throw std::invalid_argument("schedule: factor must lie in (0, 1)");
            }
        }
        if (kind == ScheduleKind::kStepCondensed) {
            double prev = 0.0;
            for (double f : milestone_fractions) {
                if (!(f > prev && f < 1.0)) {
                    throw std::invalid_argument(
                        "schedule: milestone fractions must be strictly increasing in (0, 1)");
                }
                prev = f;
            }
        }
        if (kind == ScheduleKind::kCyclicalTriangular) {
            if (!(floor_fraction >= 0.0 && floor_fraction < 1.0)) {
                throw std::invalid_argument("schedule: floor_fraction must lie in [0, 1)");
            }
        }
        if (!is_recurring(kind) && horizon_epochs < 1) {
            throw std::invalid_argument("schedule: full-horizon kinds need horizon_epochs >= 1");
        }
    }
};

// One learning-rate cycle: the epoch interval it spans and the trainer's
// step resolution.
struct CyclePlan {
    int e_start = 1;
    int e_end = 1;
    int steps_per_epoch = 1;

    int total_steps() const { return (e_end - e_start + 1) * steps_per_epoch; }
};

// Milestone step indices for a condensed step schedule: floor(f * K), never
// earlier than step 1 so the cycle still restarts at the full rate.
inline std::vector<int> condensed_step_milestones(const std::vector<double>& fractions,
                                                  const CyclePlan& cycle) {
    const int total = cycle.total_steps();
    std::vector<int> out;
    out.reserve(fractions.size());
    for (double f : fractions) {
        out.push_back(std::max(1, static_cast<int>(std::floor(f * total))));
    }
    return out;
}

namespace detail {

// Shape of the recurring kinds as a function of within-cycle progress
// t in [0, 1]. Endpoints are special-cased so restarts hit init_lr exactly
// and cosine/linear cycles end at exactly zero.
inline double recurring_lr_at_progress(const LrSchedule& sched, double t) {
    const double l = sched.init_lr;
    switch (sched.kind) {
        case ScheduleKind::kCosineRecurring: {
            if (t <= 0.0) return l;
            if (t >= 1.0) return 0.0;
            const double pi = 3.14159265358979323846;
            return 0.5 * l * (1.0 + std::cos(pi * t));
        }
        case ScheduleKind::kLinearRecurring:
            return l * (1.0 - std::min(1.0, std::max(0.0, t)));
        case ScheduleKind::kCyclicalTriangular: {
            const double base = sched.floor_fraction * l;
            if (t <= 0.5) return base + (l - base) * (t / 0.5);
            return l - (l - base) * ((t - 0.5) / 0.5);
        }
        default:
            throw std::invalid_argument("lr_at_progress: not a smooth recurring kind");
    }
}

}  // namespace detail

// Continuous shape lookup (recurring smooth kinds only); step-resolved
// schedules go through lr_at below.
inline double lr_at_progress(const LrSchedule& sched, double t) {
    return detail::recurring_lr_at_progress(sched, t);
}

// Learning rate for step k (0-based) of the given cycle. For K >= 2 the
// within-cycle progress is t_k = k / (K - 1), so every recurring cycle opens
// at init_lr and the cosine/linear kinds close at exactly zero. A K = 1
// cycle emits init_lr. Full-horizon kinds derive the global position from
// the cycle's epoch offset instead.
inline double lr_at(const LrSchedule& sched, const CyclePlan& cycle, int k) {
    const int total = cycle.total_steps();
    if (k < 0 || k >= total) throw std::out_of_range("lr_at: step index outside cycle");

    switch (sched.kind) {
        case ScheduleKind::kCosineRecurring:
        case ScheduleKind::kLinearRecurring:
        case ScheduleKind::kCyclicalTriangular: {
            if (total == 1) return sched.init_lr;
            const double t = static_cast<double>(k) / static_cast<double>(total - 1);
            return detail::recurring_lr_at_progress(sched, t);
        }
        case ScheduleKind::kStepCondensed: {
            const std::vector<int> milestones = condensed_step_milestones(sched.milestone_fractions, cycle);
            double lr = sched.init_lr;
            for (int m : milestones) {
                if (k >= m) lr *= sched.factor;
            }
            return lr;
        }
        case ScheduleKind::kFullHorizonStep: {
            const int epoch = cycle.e_start + k / cycle.steps_per_epoch;
            double lr = sched.init_lr;
            for (int m : sched.milestone_epochs) {
                if (epoch >= m) lr *= sched.factor;
            }
            return lr;
        }
        case ScheduleKind::kFullHorizonCosine: {
            const std::int64_t global =
                static_cast<std::int64_t>(cycle.e_start - 1) * cycle.steps_per_epoch + k;
            const std::int64_t horizon_steps =
                static_cast<std::int64_t>(sched.horizon_epochs) * cycle.steps_per_epoch;
            if (horizon_steps <= 1) return sched.init_lr;
            if (global <= 0) return sched.init_lr;
            if (global >= horizon_steps - 1) return 0.0;
            const double t = static_cast<double>(global) / static_cast<double>(horizon_steps - 1);
            const double pi = 3.14159265358979323846;
            return 0.5 * sched.init_lr * (1.0 + std::cos(pi * t));
        }
    }
    return 0.0;
}

// Default absolute milestones for a full-horizon step schedule of length r,
// following the baseline's decay-point ratios.
inline std::vector<int> scaled_step_milestones(int r, const std::vector<double>& fractions) {
    std::vector<int> out;
    out.reserve(fractions.size());
    for (double f : fractions) {
        out.push_back(std::max(1, static_cast<int>(std::floor(f * r))));
    }
    return out;
}

}  // namespace mfo
