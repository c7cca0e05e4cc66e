// Acceptance suite: one test case per criterion, each printing a PASS line
// with its elapsed time. Fixture constants were frozen from oracle runs; the
// engine is deterministic, so every number here is reproducible bit for bit.
#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <numeric>
#include <vector>

#include "mfo/experiment.hpp"
#include "mfo/io.hpp"
#include "mfo/runner.hpp"
#include "mfo/sampler.hpp"
#include "mfo/stats.hpp"
#include "mfo/surrogate.hpp"
#include "mfo/toy_sgd.hpp"

using namespace mfo;
namespace fs = std::filesystem;

namespace {

class CriterionTimer {
public:
    CriterionTimer(int number, const char* label, double budget_seconds)
        : number_(number), label_(label), budget_(budget_seconds),
          start_(std::chrono::steady_clock::now()) {}

    double elapsed() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

    void finish() const {
        const double t = elapsed();
        REQUIRE(t < budget_);
        std::printf("[PASS] criterion %2d: %-58s (%.2fs < %.0fs)\n", number_, label_, t, budget_);
        std::fflush(stdout);
    }

private:
    int number_;
    const char* label_;
    double budget_;
    std::chrono::steady_clock::time_point start_;
};

std::string fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("mfo_accept_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir.string();
}

ExperimentResult run_into(const ExperimentConfig& cfg, const std::string& name, int workers = 1,
                          int halt_after_rounds = -1) {
    RunOptions opts;
    opts.out_dir = fresh_dir(name);
    opts.workers = workers;
    opts.halt_after_rounds = halt_after_rounds;
    return run_experiment(cfg, opts);
}

Config lw_config(double l, double w) {
    return Config({{"l", l}, {"w", w}}, "acceptance");
}

std::vector<int> rank_order(const std::vector<double>& v) {
    std::vector<int> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
        if (v[a] != v[b]) return v[a] > v[b];
        return a < b;
    });
    return idx;
}

// Shared fixture for the method-ordering and ablation experiments. The
// search space and surrogate overrides pin the regime where transient
// masking matters; everything else is engine defaults.
ExperimentConfig surrogate_experiment(SchedulerKind kind, int s_min, double l_lo, double l_hi,
                                      double w_lo, double w_hi, double sigma_l, double kappa,
                                      double beta, double sigma_noise, int repetitions,
                                      std::uint64_t base_seed) {
    ExperimentConfig cfg;
    cfg.space = SearchSpace();
    cfg.space.add("l", ParamDomain::log_uniform(l_lo, l_hi));
    cfg.space.add("w", ParamDomain::log_uniform(w_lo, w_hi));
    cfg.scheduler.kind = kind;
    cfg.scheduler.eta = 3;
    cfg.scheduler.s_min = s_min;
    cfg.scheduler.r = 81;
    cfg.scheduler.inner = SchedulerKind::kMorl;
    cfg.schedule.kind = (kind == SchedulerKind::kSha || kind == SchedulerKind::kRandomSearch)
                            ? ScheduleKind::kFullHorizonStep
                            : ScheduleKind::kCosineRecurring;
    cfg.trainer.surrogate.sigma_l = sigma_l;
    cfg.trainer.surrogate.kappa = kappa;
    cfg.trainer.surrogate.beta = beta;
    cfg.trainer.surrogate.sigma_noise = sigma_noise;
    cfg.trainer.surrogate.steps_per_epoch = 1;
    cfg.budget_multiplier = 64;
    cfg.repetitions = repetitions;
    cfg.base_seed = base_seed;
    return cfg;
}

// True asymptote of each repetition's selected configuration.
std::vector<double> selected_asymptotes(const ExperimentConfig& cfg, const std::string& name) {
    const ExperimentResult result = run_into(cfg, name);
    std::vector<double> out;
    out.reserve(result.repetitions.size());
    for (const auto& rr : result.repetitions) {
        out.push_back(make_surrogate_task(cfg, rr.rep).true_asymptote(rr.best_config));
    }
    return out;
}

}  // namespace

TEST_CASE("criterion 1: algorithm trace exactness at (eta=3, s_min=2, r=164)") {
    const CriterionTimer timer(1, "round boundaries, survivor ladder, billed epochs", 1.0);

    const auto boundaries = round_boundaries(3, 2, 164);
    REQUIRE(boundaries == std::vector<RoundBoundary>{{2, 1, 9}, {3, 10, 27}, {4, 28, 164}});

    const RoundPlan plan = RoundPlan::make(3, 2, 164, ScheduleMode::kRecurring);
    REQUIRE(plan_cost(plan, 27) == 816);

    ExperimentConfig cfg;
    cfg.scheduler.kind = SchedulerKind::kMorl;
    cfg.scheduler.eta = 3;
    cfg.scheduler.s_min = 2;
    cfg.scheduler.r = 164;
    cfg.schedule.kind = ScheduleKind::kCosineRecurring;
    cfg.trainer.surrogate.steps_per_epoch = 1;
    cfg.budget_epochs = 816;  // solve_n lands on exactly 27 trials
    cfg.repetitions = 1;
    cfg.base_seed = 7;
    const ExperimentResult result = run_into(cfg, "criterion1");
    const auto& rr = result.repetitions[0];
    REQUIRE(rr.records.size() == 27);

    int reached_round2 = 0;
    int reached_round3 = 0;
    std::uint64_t billed = 0;
    for (const auto& rec : rr.records) {
        billed += rec.epochs_billed;
        if (rec.epochs_billed >= 10) ++reached_round2;
        if (rec.epochs_billed >= 28) ++reached_round3;
        REQUIRE((rec.epochs_billed == 9 || rec.epochs_billed == 27 || rec.epochs_billed == 164));
    }
    REQUIRE(reached_round2 == 9);   // survivor ladder 27 -> 9
    REQUIRE(reached_round3 == 3);   // -> 3
    REQUIRE(billed == 816);
    REQUIRE(rr.consumed == 816);

    timer.finish();
}

TEST_CASE("criterion 2: recurring-cosine cycle endpoints are exact") {
    const CriterionTimer timer(2, "cycle opens at l, closes at 0, midpoint l/2", 1.0);

    LrSchedule sched;
    sched.kind = ScheduleKind::kCosineRecurring;
    sched.init_lr = 0.1;
    for (int spe : {1, 10}) {
        for (const auto& b : round_boundaries(3, 2, 164)) {
            const CyclePlan cycle{b.e_start, b.e_end, spe};
            REQUIRE(lr_at(sched, cycle, 0) == 0.1);                       // exactly l
            REQUIRE(lr_at(sched, cycle, cycle.total_steps() - 1) == 0.0);  // exactly 0
        }
    }
    REQUIRE(std::abs(lr_at_progress(sched, 0.5) - 0.05) < 1e-12);
    // A cycle with an exact middle step agrees at step resolution too.
    const CyclePlan odd{1, 9, 1};
    REQUIRE(std::abs(lr_at(sched, odd, 4) - 0.05) < 1e-12);

    timer.finish();
}

TEST_CASE("criterion 3: budget ledger arithmetic and exact 64r consumption") {
    const CriterionTimer timer(3, "solve_n oracle and random-search consumption", 1.0);

    const RoundPlan plan = RoundPlan::make(3, 2, 27, ScheduleMode::kRecurring);
    REQUIRE(solve_n(500, plan) == 33);
    REQUIRE(plan_cost(plan, 33) == 495);
    // Independent enumeration oracle.
    int expect = 1;
    while (plan_cost(plan, expect + 1) <= 500) ++expect;
    REQUIRE(expect == 33);

    ExperimentConfig cfg;
    cfg.scheduler.kind = SchedulerKind::kRandomSearch;
    cfg.scheduler.r = 27;
    cfg.schedule.kind = ScheduleKind::kFullHorizonStep;
    cfg.trainer.surrogate.steps_per_epoch = 1;
    cfg.budget_multiplier = 64;
    cfg.repetitions = 1;
    cfg.base_seed = 3;
    const ExperimentResult result = run_into(cfg, "criterion3");
    REQUIRE(result.repetitions[0].records.size() == 64);  // 64 full runs
    REQUIRE(result.repetitions[0].consumed == 64ull * 27ull);

    timer.finish();
}

TEST_CASE("criterion 4: slow-starter phenomenon and cycle-end fidelity") {
    const CriterionTimer timer(4, "step-schedule misranking, cosine cycle-end ranking", 30.0);

    // Half one: under the full-horizon step schedule the truly best config
    // is observably outranked at epoch 30 whenever its required rate is
    // above the field median. Fixture: 24-point learning-rate grid, weight
    // decay pinned at the optimum, strong transient (beta 0.85), no noise.
    SurrogateParams params;
    params.sigma_noise = 0.0;
    params.beta = 0.85;
    params.steps_per_epoch = 1;
    params.horizon_epochs = 164;

    const int kGrid = 24;
    int qualifying = 0;
    int misranked = 0;
    for (int t = 0; t < 100; ++t) {
        const SurrogateTask task(1000 + t, params);
        std::vector<double> rates(kGrid);
        for (int i = 0; i < kGrid; ++i) {
            rates[i] = std::pow(10.0, -3.0 + 3.0 * i / (kGrid - 1.0));
        }
        const double field_median = std::sqrt(rates[kGrid / 2 - 1] * rates[kGrid / 2]);
        if (std::exp(task.log_lstar()) <= field_median) continue;
        ++qualifying;

        const SurrogateTrainer trainer(task);
        LrSchedule step;
        step.kind = ScheduleKind::kFullHorizonStep;
        step.factor = 0.1;
        step.horizon_epochs = 164;
        step.milestone_epochs = {81, 122};

        std::vector<double> observed(kGrid);
        std::vector<double> true_a(kGrid);
        for (int i = 0; i < kGrid; ++i) {
            const Config c = lw_config(rates[i], std::exp(task.log_wstar()));
            true_a[i] = task.true_asymptote(c);
            step.init_lr = rates[i];
            auto state = trainer.init(c, 1);
            const CyclePlan cycle{1, 164, 1};
            double metric = 0.0;
            for (int e = 1; e <= 30; ++e) {
                const int base = (e - 1) * cycle.steps_per_epoch;
                metric = trainer
                             .train_epoch(*state,
                                          [&](int k) { return lr_at(step, cycle, base + k); })
                             .val_metric;
            }
            observed[i] = metric;
        }
        if (rank_order(observed)[0] != rank_order(true_a)[0]) ++misranked;
    }
    REQUIRE(qualifying >= 30);
    REQUIRE(misranked >= (qualifying * 8 + 9) / 10);  // >= 80% of qualifying tasks
    REQUIRE(misranked == qualifying);                 // frozen oracle observation: 100%

    // Half two: under the recurring cosine schedule every cycle ends at
    // lr = 0, so observed metrics rank exactly like true progress.
    SurrogateParams cos_params = params;
    cos_params.a_min = 0.2;  // keeps every grid point above the chance clamp
    cos_params.horizon_epochs = 81;
    int perfect = 0;
    const int kField = 10;
    for (int t = 0; t < 100; ++t) {
        const SurrogateTask task(5000 + t, cos_params);
        const SurrogateTrainer trainer(task);
        std::vector<double> rates(kField);
        for (int i = 0; i < kField; ++i) {
            rates[i] =
                task.l_ref() * std::exp(-std::log(3.0) + 2.0 * std::log(3.0) * i / (kField - 1.0));
        }
        LrSchedule cos_sched;
        cos_sched.kind = ScheduleKind::kCosineRecurring;

        std::vector<std::unique_ptr<TrainerState>> states;
        std::vector<double> asymptote(kField);
        for (int i = 0; i < kField; ++i) {
            const Config c = lw_config(rates[i], std::exp(task.log_wstar()));
            asymptote[i] = task.true_asymptote(c);
            states.push_back(trainer.init(c, 1));
        }
        bool all_match = true;
        for (const auto& b : round_boundaries(3, 2, 81)) {
            const CyclePlan cycle{b.e_start, b.e_end, 1};
            std::vector<double> observed(kField);
            std::vector<double> truth(kField);
            for (int i = 0; i < kField; ++i) {
                cos_sched.init_lr = rates[i];
                double metric = 0.0;
                for (int e = b.e_start; e <= b.e_end; ++e) {
                    const int base = (e - b.e_start) * cycle.steps_per_epoch;
                    metric =
                        trainer
                            .train_epoch(*states[i],
                                         [&](int k) { return lr_at(cos_sched, cycle, base + k); })
                            .val_metric;
                }
                observed[i] = metric;
                const auto& s = dynamic_cast<const SurrogateState&>(*states[i]);
                REQUIRE(s.last_lr() == 0.0);  // cycle closed at exactly zero
                truth[i] = asymptote[i] * (1.0 - std::exp(-cos_params.kappa * s.progress()));
            }
            if (rank_order(observed) != rank_order(truth)) all_match = false;
        }
        if (all_match) ++perfect;
    }
    REQUIRE(perfect == 100);

    timer.finish();
}

TEST_CASE("criterion 5: method ordering, morl above sha at both exponents") {
    const CriterionTimer timer(5, "paired 50-seed surrogate experiments, sign tests", 300.0);

    // Frozen fixture: dense space around the hidden-optimum ranges, wide
    // optimum in l, strong transient. Oracle run observed morl 0.7283 vs
    // sha2 0.7133 (24W/4L) and sha0 0.6980 (43W/5L).
    auto fixture = [](SchedulerKind kind, int s_min) {
        return surrogate_experiment(kind, s_min, 1e-3, 1.0, 1e-5, 1e-1,
                                    /*sigma_l=*/1.5, /*kappa=*/5.0, /*beta=*/0.95,
                                    /*sigma_noise=*/0.01, /*repetitions=*/50,
                                    /*base_seed=*/20250801);
    };
    const auto morl = selected_asymptotes(fixture(SchedulerKind::kMorl, 2), "criterion5_morl");
    const auto sha2 = selected_asymptotes(fixture(SchedulerKind::kSha, 2), "criterion5_sha2");
    const auto sha0 = selected_asymptotes(fixture(SchedulerKind::kSha, 0), "criterion5_sha0");

    auto compare = [&](const std::vector<double>& other) {
        int wins = 0;
        int losses = 0;
        for (std::size_t i = 0; i < morl.size(); ++i) {
            if (morl[i] > other[i]) ++wins;
            else if (morl[i] < other[i]) ++losses;
        }
        return std::pair<double, double>(mean(morl) - mean(other),
                                         sign_test_p_one_sided(wins, losses));
    };
    const auto [gap2, p2] = compare(sha2);
    REQUIRE(gap2 > 0.0);
    REQUIRE(p2 < 0.05);
    const auto [gap0, p0] = compare(sha0);
    REQUIRE(gap0 > 0.0);
    REQUIRE(p0 < 0.05);

    timer.finish();
}

TEST_CASE("criterion 6: minimum-exponent ablation direction and hyperband envelope") {
    const CriterionTimer timer(6, "s_min sweep peaks at 2, hyperband inside envelope", 300.0);

    // Frozen fixture: sparse space with a sharp optimum and slow progress,
    // so one- and three-epoch rungs sit below the chance clamp while
    // nine-epoch rungs are informative. Oracle run observed means
    // 0.562 / 0.596 / 0.645 / 0.535 / 0.421 for s_min 0..4, hyperband 0.584.
    auto fixture = [](SchedulerKind kind, int s_min) {
        return surrogate_experiment(kind, s_min, 1e-4, 10.0, 1e-6, 1.0,
                                    /*sigma_l=*/0.5, /*kappa=*/0.35, /*beta=*/0.95,
                                    /*sigma_noise=*/0.002, /*repetitions=*/30,
                                    /*base_seed=*/20250801);
    };
    std::map<int, double> means;
    for (int s : {0, 1, 2, 3, 4}) {
        means[s] = mean(selected_asymptotes(fixture(SchedulerKind::kMorl, s),
                                            "criterion6_smin" + std::to_string(s)));
    }
    REQUIRE(means[2] >= means[0]);
    REQUIRE(means[2] >= means[4]);

    const auto hb = selected_asymptotes(fixture(SchedulerKind::kHyperband, 0), "criterion6_hb");
    const double hb_mean = mean(hb);
    double lo = 1.0;
    double hi = 0.0;
    for (const auto& [s, m] : means) {
        lo = std::min(lo, m);
        hi = std::max(hi, m);
    }
    REQUIRE(hb_mean >= lo);
    REQUIRE(hb_mean <= hi);

    timer.finish();
}

TEST_CASE("criterion 7: tpe beats random on the quadratic and splits exactly") {
    const CriterionTimer timer(7, "sequential tpe vs random, split cardinalities", 30.0);

    SearchSpace space;
    space.add("x", ParamDomain::uniform(0.0, 1.0));
    TpeParams params;
    params.gamma = 0.15;     // fixture follows the borrowed framework's split
    params.n_startup = 20;
    std::vector<double> tpe_best(20);
    std::vector<double> rand_best(20);
    for (int pair = 0; pair < 20; ++pair) {
        RandomStream tpe_rng(derive_seed(900 + pair, {key_of("tpe")}));
        std::vector<Observation> history;
        double best = -1e9;
        for (int i = 0; i < 100; ++i) {
            Config c = tpe_suggest(space, history, params, tpe_rng);
            const double x = c.get("x");
            const double f = -(x - 0.3) * (x - 0.3);
            best = std::max(best, f);
            history.push_back({std::move(c), f});
        }
        tpe_best[pair] = best;
        RandomStream rnd(derive_seed(900 + pair, {key_of("rand")}));
        best = -1e9;
        for (int i = 0; i < 100; ++i) {
            const double x = rnd.uniform01();
            best = std::max(best, -(x - 0.3) * (x - 0.3));
        }
        rand_best[pair] = best;
    }
    std::vector<double> sorted = rand_best;
    std::sort(sorted.begin(), sorted.end());
    const double rand_median = 0.5 * (sorted[9] + sorted[10]);
    int wins = 0;
    for (int i = 0; i < 20; ++i) {
        if (tpe_best[i] > rand_median) ++wins;
    }
    REQUIRE(wins >= 16);  // >= 80% of pairs; frozen oracle observed 19/20

    // Split cardinalities per the ceil(gamma * N) rule.
    RandomStream rng(1);
    std::vector<Observation> history;
    for (int i = 1; i <= 40; ++i) {
        history.push_back({random_suggest(space, rng), rng.uniform01()});
        for (double gamma : {0.1, 0.25, 0.5, 0.9}) {
            const auto [good, bad] = tpe_split(history, gamma);
            REQUIRE(good.size() == static_cast<std::size_t>(std::ceil(gamma * i)));
            REQUIRE(good.size() + bad.size() == static_cast<std::size_t>(i));
        }
    }

    timer.finish();
}

TEST_CASE("criterion 8: every recurring schedule variant completes under morl") {
    const CriterionTimer timer(8, "schedule-variant coverage plus invariants", 60.0);

    for (ScheduleKind kind : {ScheduleKind::kCosineRecurring, ScheduleKind::kStepCondensed,
                              ScheduleKind::kCyclicalTriangular, ScheduleKind::kLinearRecurring}) {
        ExperimentConfig cfg;
        cfg.scheduler.kind = SchedulerKind::kMorl;
        cfg.scheduler.eta = 3;
        cfg.scheduler.s_min = 1;
        cfg.scheduler.r = 27;
        cfg.schedule.kind = kind;
        cfg.trainer.surrogate.steps_per_epoch = 2;
        cfg.budget_epochs = 300;
        cfg.repetitions = 2;
        cfg.base_seed = 21;
        const ExperimentResult result =
            run_into(cfg, "criterion8_" + schedule_kind_name(kind));
        REQUIRE(result.completed);
        REQUIRE(result.repetitions.size() == 2);
        for (const auto& rr : result.repetitions) REQUIRE(rr.best_metric > 0.0);

        // Schedule invariants over every cycle of the plan.
        LrSchedule sched;
        sched.kind = kind;
        sched.init_lr = 0.1;
        const bool monotone = kind != ScheduleKind::kCyclicalTriangular;
        for (const auto& b : round_boundaries(3, 1, 27)) {
            const CyclePlan cycle{b.e_start, b.e_end, 2};
            double prev = -1.0;
            for (int k = 0; k < cycle.total_steps(); ++k) {
                const double lr = lr_at(sched, cycle, k);
                REQUIRE(lr >= 0.0);
                REQUIRE(lr <= sched.init_lr);
                if (monotone && k > 0) REQUIRE(lr <= prev);
                prev = lr;
            }
            if (monotone) REQUIRE(lr_at(sched, cycle, 0) == sched.init_lr);  // restart at l
        }
    }

    timer.finish();
}

TEST_CASE("criterion 9: determinism across runs and workers, resume equality") {
    const CriterionTimer timer(9, "byte-identical logs, kill-and-resume equality", 120.0);

    ExperimentConfig cfg;
    cfg.scheduler.kind = SchedulerKind::kMorl;
    cfg.scheduler.eta = 3;
    cfg.scheduler.s_min = 2;
    cfg.scheduler.r = 27;
    cfg.schedule.kind = ScheduleKind::kCosineRecurring;
    cfg.trainer.surrogate.steps_per_epoch = 1;
    cfg.budget_epochs = 500;
    cfg.repetitions = 2;
    cfg.base_seed = 11;

    const ExperimentResult a = run_into(cfg, "criterion9_a", 1);
    const ExperimentResult b = run_into(cfg, "criterion9_b", 1);
    const ExperimentResult c = run_into(cfg, "criterion9_c", 4);
    REQUIRE(a.completed);
    REQUIRE(b.completed);
    REQUIRE(c.completed);
    const std::string base = fs::temp_directory_path() / "mfo_accept_criterion9_";
    for (const char* file : {"events.jsonl", "records.jsonl", "summary.json", "trajectory.csv"}) {
        const std::string fa = read_file(base + "a/" + file);
        REQUIRE(fa == read_file(base + "b/" + file));
        REQUIRE(fa == read_file(base + "c/" + file));
    }

    // Kill after the first round, then resume to completion.
    const ExperimentResult partial = run_into(cfg, "criterion9_halt", 1, 1);
    REQUIRE_FALSE(partial.completed);
    const ExperimentResult resumed = resume_experiment(base + "halt", 1);
    REQUIRE(resumed.completed);
    REQUIRE(resumed.mean_best == a.mean_best);
    for (const char* file : {"events.jsonl", "records.jsonl", "summary.json", "trajectory.csv"}) {
        REQUIRE(read_file(base + "halt/" + file) == read_file(base + "a/" + file));
    }

    timer.finish();
}

TEST_CASE("criterion 10: toy sgd matches the one-step oracle and learns the blobs") {
    const CriterionTimer timer(10, "momentum oracle, 164-epoch baseline accuracy", 60.0);

    // Closed-form single step on f(theta) = theta^2 / 2.
    std::vector<double> theta{1.0};
    std::vector<double> velocity{0.0};
    momentum_sgd_step(theta, velocity, std::vector<double>{1.0}, 0.1, 0.9, 0.0);
    REQUIRE(std::abs(theta[0] - 0.9) < 1e-12);

    // Full-length baseline-like run on the seeded blobs; the floor was
    // frozen from the oracle run (observed 1.0).
    const ToySgdTrainer trainer(BlobDataset::make(derive_seed(1, {key_of("blob-data")})));
    const Config baseline({{"l", 0.1}, {"w", 5e-4}, {"m", 0.1}, {"b", 128}}, "baseline");
    auto state = trainer.init(baseline, 424242);
    LrSchedule sched;
    sched.kind = ScheduleKind::kFullHorizonStep;
    sched.init_lr = 0.1;
    sched.factor = 0.1;
    sched.horizon_epochs = 164;
    sched.milestone_epochs = {81, 122};
    const CyclePlan cycle{1, 164, state->steps_per_epoch()};
    double accuracy = 0.0;
    for (int e = 1; e <= 164; ++e) {
        const int base = (e - 1) * cycle.steps_per_epoch;
        accuracy = trainer
                       .train_epoch(*state, [&](int k) { return lr_at(sched, cycle, base + k); })
                       .val_metric;
    }
    REQUIRE(accuracy >= 0.95);

    timer.finish();
}
