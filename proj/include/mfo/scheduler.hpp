#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "mfo/lr_schedule.hpp"

namespace mfo {

// Whether trials follow a per-round condensed-and-restarted schedule cycle
// (MORL) or slices of one global full-horizon schedule (SHA, random search).
enum class ScheduleMode { kRecurring, kFullHorizon };

inline std::string schedule_mode_name(ScheduleMode m) {
    return m == ScheduleMode::kRecurring ? "recurring" : "full_horizon";
}

struct RoundPlan {
    std::vector<RoundBoundary> boundaries;
    int eta = 3;
    int s_min = 2;
    int r = 1;
    ScheduleMode mode = ScheduleMode::kRecurring;

    static RoundPlan make(int eta, int s_min, int r, ScheduleMode mode) {
        RoundPlan plan;
        plan.boundaries = round_boundaries(eta, s_min, r);
        plan.eta = eta;
        plan.s_min = s_min;
        plan.r = r;
        plan.mode = mode;
        return plan;
    }

    int num_rounds() const { return static_cast<int>(boundaries.size()); }
};

// Survivor count after one promotion: keep the top floor(n / eta), but never
// fewer than one.
inline int promotion_count(int n, int eta) {
    if (n < 1) throw std::invalid_argument("promotion_count: empty round");
    return std::max(1, n / eta);
}

struct TrialResult {
    int trial_id = 0;
    double metric = 0.0;
};

// Promoted trial ids: the top 1/eta by metric, descending, ties broken by
// smaller trial id. Returned sorted by trial id.
inline std::vector<int> top_k(std::vector<TrialResult> results, int eta) {
    if (results.empty()) throw std::invalid_argument("top_k: empty result set");
    for (const auto& r : results) {
        if (!std::isfinite(r.metric)) {
            throw std::invalid_argument("top_k: non-finite metric for trial " +
                                        std::to_string(r.trial_id));
        }
    }
    const int keep = promotion_count(static_cast<int>(results.size()), eta);
    std::sort(results.begin(), results.end(), [](const TrialResult& a, const TrialResult& b) {
        if (a.metric != b.metric) return a.metric > b.metric;
        return a.trial_id < b.trial_id;
    });
    std::vector<int> promoted;
    promoted.reserve(keep);
    for (int i = 0; i < keep; ++i) promoted.push_back(results[i].trial_id);
    std::sort(promoted.begin(), promoted.end());
    return promoted;
}

// Total epoch cost of running the plan with n starting trials: each round
// bills (survivors in that round) * (epochs in that round). Checkpointed
// resumes mean epochs are paid exactly once.
inline std::uint64_t plan_cost(const RoundPlan& plan, int n) {
    if (n < 1) throw std::invalid_argument("plan_cost: n must be >= 1");
    std::uint64_t cost = 0;
    int survivors = n;
    for (std::size_t j = 0; j < plan.boundaries.size(); ++j) {
        if (j > 0) survivors = promotion_count(survivors, plan.eta);
        cost += static_cast<std::uint64_t>(survivors) *
                static_cast<std::uint64_t>(plan.boundaries[j].epochs());
    }
    return cost;
}

// Largest n whose plan cost fits the budget; plan_cost is non-decreasing in
// n, so a binary search suffices.
inline int solve_n(std::uint64_t budget, const RoundPlan& plan) {
    if (budget < plan_cost(plan, 1)) {
        throw std::invalid_argument("solve_n: budget below the cost of a single trial");
    }
    int lo = 1;  // feasible
    int hi = static_cast<int>(std::min<std::uint64_t>(budget, 1u << 30)) + 1;  // cost(n) >= n
    while (lo + 1 < hi) {
        const int mid = lo + (hi - lo) / 2;
        if (plan_cost(plan, mid) <= budget) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return lo;
}

struct Bracket {
    int s_min_b = 0;
    RoundPlan plan;
    std::uint64_t allocated_budget = 0;
    int n = 0;
};

// Hyperband: one bracket per s_min in {0, ..., floor(log_eta r)}, the
// experiment budget split equally with the remainder going to the most
// aggressive bracket, and each bracket sized by solve_n.
inline std::vector<Bracket> hyperband_plan(std::uint64_t budget, int eta, int r,
                                           ScheduleMode inner_mode) {
    const int s_max = detail::floor_log(eta, r);
    const auto num_brackets = static_cast<std::uint64_t>(s_max + 1);
    const std::uint64_t share = budget / num_brackets;
    const std::uint64_t remainder = budget % num_brackets;
    std::vector<Bracket> brackets;
    for (int s = 0; s <= s_max; ++s) {
        Bracket b;
        b.s_min_b = s;
        b.plan = RoundPlan::make(eta, s, r, inner_mode);
        b.allocated_budget = share + (s == 0 ? remainder : 0);
        if (b.allocated_budget < plan_cost(b.plan, 1)) {
            throw std::invalid_argument("hyperband_plan: budget too small for bracket s_min=" +
                                        std::to_string(s));
        }
        b.n = solve_n(b.allocated_budget, b.plan);
        brackets.push_back(std::move(b));
    }
    return brackets;
}

enum class TrialPhase { kPending, kRunning, kAwaitingPromotion, kStopped, kCompleted };

inline std::string trial_phase_name(TrialPhase p) {
    switch (p) {
        case TrialPhase::kPending: return "pending";
        case TrialPhase::kRunning: return "running";
        case TrialPhase::kAwaitingPromotion: return "awaiting_promotion";
        case TrialPhase::kStopped: return "stopped";
        case TrialPhase::kCompleted: return "completed";
    }
    return "?";
}

struct TrialStatus {
    TrialPhase phase = TrialPhase::kPending;
    int round = 0;        // index into plan.boundaries
    double metric = 0.0;  // last reported round metric
};

// Synchronous promotion state machine shared by SHA and MORL; the two
// differ only in the plan's schedule mode, which the runner uses when it
// builds learning-rate cycles. Rounds are hard barriers: promotion fires
// only once every active trial has reported.
class HalvingScheduler {
public:
    struct StepOutcome {
        std::vector<int> promoted;
        std::vector<int> stopped;
        bool finished = false;
    };

    HalvingScheduler(RoundPlan plan, int n) : plan_(std::move(plan)) {
        if (n < 1) throw std::invalid_argument("scheduler: need at least one trial");
        for (int id = 1; id <= n; ++id) {
            statuses_[id] = TrialStatus{TrialPhase::kRunning, 0, 0.0};
            active_.push_back(id);
        }
    }

    const RoundPlan& plan() const { return plan_; }
    int current_round() const { return round_; }
    RoundBoundary current_boundary() const { return plan_.boundaries.at(round_); }
    bool finished() const { return finished_; }
    const std::vector<int>& active_trials() const { return active_; }

    const TrialStatus& status(int trial_id) const {
        const auto it = statuses_.find(trial_id);
        if (it == statuses_.end()) throw std::invalid_argument("scheduler: unknown trial id");
        return it->second;
    }

    // Delivers one trial's end-of-round metric. Arrival order is irrelevant;
    // promotion depends only on the complete report set.
    void submit(int trial_id, double metric) {
        auto it = statuses_.find(trial_id);
        if (it == statuses_.end()) throw std::invalid_argument("scheduler: unknown trial id");
        if (it->second.phase != TrialPhase::kRunning || it->second.round != round_) {
            throw std::invalid_argument("scheduler: trial " + std::to_string(trial_id) +
                                        " is not running in the current round");
        }
        it->second.phase = TrialPhase::kAwaitingPromotion;
        it->second.metric = metric;
        reports_.push_back(TrialResult{trial_id, metric});
    }

    bool round_complete() const { return reports_.size() == active_.size(); }

    // Applies the promotion rule and opens the next round (or finishes the
    // plan). Missing reports are a caller bug, not a tie-breaking situation.
    StepOutcome advance() {
        if (finished_) throw std::logic_error("scheduler: already finished");
        if (!round_complete()) {
            throw std::invalid_argument("scheduler: missing report for an active trial");
        }
        StepOutcome outcome;
        const bool last_round = round_ + 1 >= plan_.num_rounds();
        if (last_round) {
            for (const auto& r : reports_) {
                statuses_[r.trial_id].phase = TrialPhase::kCompleted;
            }
            finished_ = true;
            outcome.finished = true;
            selection_ = best_of(reports_);
        } else {
            outcome.promoted = top_k(reports_, plan_.eta);
            for (const auto& r : reports_) {
                const bool kept = std::binary_search(outcome.promoted.begin(),
                                                     outcome.promoted.end(), r.trial_id);
                auto& st = statuses_[r.trial_id];
                if (kept) {
                    st.phase = TrialPhase::kRunning;
                    st.round = round_ + 1;
                } else {
                    st.phase = TrialPhase::kStopped;
                    outcome.stopped.push_back(r.trial_id);
                }
            }
            active_ = outcome.promoted;
            ++round_;
        }
        reports_.clear();
        return outcome;
    }

    // Best completed trial; only meaningful once finished.
    int selection() const {
        if (!finished_) throw std::logic_error("scheduler: plan not finished");
        return selection_;
    }

    double selection_metric() const { return statuses_.at(selection()).metric; }

private:
    static int best_of(const std::vector<TrialResult>& results) {
        int best = results.front().trial_id;
        double best_metric = results.front().metric;
        for (const auto& r : results) {
            if (r.metric > best_metric || (r.metric == best_metric && r.trial_id < best)) {
                best = r.trial_id;
                best_metric = r.metric;
            }
        }
        return best;
    }

    RoundPlan plan_;
    std::map<int, TrialStatus> statuses_;
    std::vector<int> active_;
    std::vector<TrialResult> reports_;
    int round_ = 0;
    bool finished_ = false;
    int selection_ = 0;
};

}  // namespace mfo
