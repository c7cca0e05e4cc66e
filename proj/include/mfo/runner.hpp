#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "mfo/event_log.hpp"
#include "mfo/experiment.hpp"
#include "mfo/io.hpp"
#include "mfo/stats.hpp"
#include "mfo/toy_sgd.hpp"

namespace mfo {

struct EpochEntry {
    int epoch = 0;
    double val_metric = 0.0;
    double final_step_lr = 0.0;
};

// One configuration's lifecycle inside a repetition.
struct TrialRecord {
    int trial_id = 0;
    int generation = 0;
    int bracket = 0;
    Config config;
    std::vector<std::string> status_history;
    std::string status = "pending";
    std::vector<EpochEntry> epochs;
    int epochs_billed = 0;
    std::string checkpoint_id;

    double deepest_metric() const { return epochs.empty() ? 0.0 : epochs.back().val_metric; }

    void set_status(std::string s) {
        status = std::move(s);
        status_history.push_back(status);
    }
};

// Epoch-unit accounting. Every train_epoch call is billed exactly once;
// exceeding the budget is a hard error rather than a warning.
class BudgetLedger {
public:
    explicit BudgetLedger(std::uint64_t budget) : budget_(budget) {}

    void bill(int trial_id, std::uint64_t epochs) {
        if (consumed_ + epochs > budget_) {
            throw std::runtime_error("budget ledger: commit would exceed budget");
        }
        consumed_ += epochs;
        per_trial_[trial_id] += epochs;
    }

    std::uint64_t budget() const { return budget_; }
    std::uint64_t consumed() const { return consumed_; }
    std::uint64_t for_trial(int trial_id) const {
        const auto it = per_trial_.find(trial_id);
        return it == per_trial_.end() ? 0 : it->second;
    }

private:
    std::uint64_t budget_;
    std::uint64_t consumed_ = 0;
    std::map<int, std::uint64_t> per_trial_;
};

// One completed evaluation in ledger order.
struct EvalPoint {
    std::uint64_t consumed_epochs = 0;
    double metric = 0.0;
};

// Budget-versus-best curve: one point per evaluation, x is the ledger
// consumption at that moment, y the running best.
inline std::vector<std::pair<std::uint64_t, double>> best_trajectory(
    const std::vector<EvalPoint>& evals) {
    std::vector<std::pair<std::uint64_t, double>> out;
    out.reserve(evals.size());
    double best = -1.0;
    for (const auto& e : evals) {
        best = std::max(best, e.metric);
        out.emplace_back(e.consumed_epochs, best);
    }
    return out;
}

struct RepetitionResult {
    int rep = 0;
    std::uint64_t seed = 0;
    int selected_trial = 0;
    Config best_config;
    double best_metric = 0.0;
    std::uint64_t consumed = 0;
    std::vector<TrialRecord> records;
    std::vector<std::pair<std::uint64_t, double>> trajectory;
};

struct ExperimentResult {
    ExperimentConfig config;
    std::vector<RepetitionResult> repetitions;
    double mean_best = 0.0;
    double ci95_halfwidth = 0.0;
    bool completed = true;  // false when halted early (test hook)
};

struct RunOptions {
    std::string out_dir;
    int workers = 1;
    // Test hook: stop after this many newly executed rounds (-1 = never).
    int halt_after_rounds = -1;
};

// Runs fn(0..n-1) on up to `workers` threads. Results must be deposited into
// index-addressed slots by the caller; scheduling order never leaks into
// observable state.
inline void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
    if (workers <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    const int count = std::min(workers, n);
    pool.reserve(count);
    for (int w = 0; w < count; ++w) {
        pool.emplace_back([&] {
            while (true) {
                const int i = next.fetch_add(1);
                if (i >= n) break;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

// Rebuilds the surrogate task exactly as the runner does for a given
// repetition; lets tests and tooling query true asymptotes of selections.
inline SurrogateTask make_surrogate_task(const ExperimentConfig& cfg, int rep) {
    SurrogateParams params = cfg.trainer.surrogate;
    params.horizon_epochs = cfg.scheduler.r;
    const std::uint64_t rep_seed = cfg.base_seed + static_cast<std::uint64_t>(rep);
    return SurrogateTask(derive_seed(rep_seed, {key_of("task")}), params);
}

namespace run_detail {

struct Halted {};  // unwinds the run loop when the test hook fires

struct Unit {
    int generation = 0;
    int bracket = 0;  // index into hyperband brackets; 0 otherwise
    RoundPlan plan;
    std::uint64_t budget_share = 0;
    int n = 0;
};

class EventCursor {
public:
    explicit EventCursor(const std::vector<json>* events) : events_(events) {}

    bool has(const std::string& type) const {
        return events_ != nullptr && pos_ < events_->size() &&
               (*events_)[pos_].value("type", "") == type;
    }

    json take(const std::string& type) {
        if (!has(type)) throw std::runtime_error("resume: event log out of order, expected " + type);
        return (*events_)[pos_++];
    }

    bool exhausted() const { return events_ == nullptr || pos_ >= events_->size(); }

private:
    const std::vector<json>* events_;
    std::size_t pos_ = 0;
};

inline ScheduleMode mode_for(const ExperimentConfig& cfg) {
    switch (cfg.scheduler.kind) {
        case SchedulerKind::kMorl: return ScheduleMode::kRecurring;
        case SchedulerKind::kSha:
        case SchedulerKind::kRandomSearch: return ScheduleMode::kFullHorizon;
        case SchedulerKind::kHyperband:
            return cfg.scheduler.inner == SchedulerKind::kMorl ? ScheduleMode::kRecurring
                                                               : ScheduleMode::kFullHorizon;
    }
    return ScheduleMode::kRecurring;
}

// The per-repetition execution plan: generation batches, and within each
// one halving execution (or one bracket set for hyperband, or one plain
// full-training pool for random search).
inline std::vector<Unit> plan_units(const ExperimentConfig& cfg) {
    const int generations =
        cfg.sampler.kind == SamplerKind::kTpe ? std::max(1, cfg.sampler.generations) : 1;
    const std::uint64_t total = cfg.budget();
    const std::uint64_t share = total / static_cast<std::uint64_t>(generations);
    const std::uint64_t remainder = total % static_cast<std::uint64_t>(generations);
    std::vector<Unit> units;
    for (int g = 0; g < generations; ++g) {
        const std::uint64_t budget_g = share + (g == 0 ? remainder : 0);
        switch (cfg.scheduler.kind) {
            case SchedulerKind::kMorl:
            case SchedulerKind::kSha: {
                Unit u;
                u.generation = g;
                u.plan = RoundPlan::make(cfg.scheduler.eta, cfg.scheduler.s_min, cfg.scheduler.r,
                                         mode_for(cfg));
                u.budget_share = budget_g;
                u.n = solve_n(budget_g, u.plan);
                units.push_back(std::move(u));
                break;
            }
            case SchedulerKind::kHyperband: {
                const auto brackets =
                    hyperband_plan(budget_g, cfg.scheduler.eta, cfg.scheduler.r, mode_for(cfg));
                for (std::size_t b = 0; b < brackets.size(); ++b) {
                    Unit u;
                    u.generation = g;
                    u.bracket = static_cast<int>(b);
                    u.plan = brackets[b].plan;
                    u.budget_share = brackets[b].allocated_budget;
                    u.n = brackets[b].n;
                    units.push_back(std::move(u));
                }
                break;
            }
            case SchedulerKind::kRandomSearch: {
                Unit u;
                u.generation = g;
                u.plan.boundaries = {RoundBoundary{0, 1, cfg.scheduler.r}};
                u.plan.eta = cfg.scheduler.eta;
                u.plan.s_min = 0;
                u.plan.r = cfg.scheduler.r;
                u.plan.mode = ScheduleMode::kFullHorizon;
                u.budget_share = budget_g;
                u.n = static_cast<int>(budget_g / static_cast<std::uint64_t>(cfg.scheduler.r));
                if (u.n < 1) throw ConfigError("random search: budget below one full training");
                units.push_back(std::move(u));
                break;
            }
        }
    }
    return units;
}

inline json boundary_to_json(const RoundBoundary& b) {
    return json{{"s", b.s}, {"e_start", b.e_start}, {"e_end", b.e_end}};
}

class Engine {
public:
    Engine(ExperimentConfig cfg, RunOptions opts) : cfg_(std::move(cfg)), opts_(std::move(opts)) {
        validate_experiment(cfg_);
        if (cfg_.trainer.kind == TrainerKind::kSurrogate) {
            // Trainer is per-repetition (task depends on the rep seed).
        } else {
            blob_data_ = BlobDataset::make(derive_seed(cfg_.base_seed, {key_of("blob-data")}),
                                           cfg_.trainer.blob_total, cfg_.trainer.blob_holdout,
                                           cfg_.trainer.blob_spread);
        }
        ensure_dir(opts_.out_dir);
        ensure_dir(checkpoint_dir());
        writer_ = std::make_unique<EventWriter>(events_path());
    }

    // Runs fresh (past empty) or resumes through a previously logged prefix.
    ExperimentResult run(const std::vector<json>& past) {
        EventCursor cursor(&past);
        ExperimentResult result;
        result.config = cfg_;

        if (cursor.has("run_started")) {
            cursor.take("run_started");
        } else {
            emit({{"type", "run_started"},
                  {"schema_version", 1},
                  {"config", experiment_config_to_json(cfg_)}});
        }

        bool was_finished = false;
        try {
            for (int rep = 0; rep < cfg_.repetitions; ++rep) {
                result.repetitions.push_back(run_repetition(rep, cursor));
            }
        } catch (const Halted&) {
            result.completed = false;
            return result;
        }

        std::vector<double> bests;
        bests.reserve(result.repetitions.size());
        for (const auto& rr : result.repetitions) bests.push_back(rr.best_metric);
        result.mean_best = mean(bests);
        result.ci95_halfwidth = bests.size() >= 2 ? ci95_halfwidth(bests) : 0.0;

        if (cursor.has("run_finished")) {
            cursor.take("run_finished");
            was_finished = true;
        } else {
            json per_rep = json::array();
            for (const auto& rr : result.repetitions) per_rep.push_back(rr.best_metric);
            emit({{"type", "run_finished"},
                  {"mean_best", result.mean_best},
                  {"ci95_halfwidth", result.ci95_halfwidth},
                  {"per_rep_best", per_rep}});
        }

        // A fully replayed run is a no-op: outputs already exist.
        if (!was_finished) write_outputs(result);
        return result;
    }

    std::string events_path() const { return opts_.out_dir + "/events.jsonl"; }
    std::string summary_path() const { return opts_.out_dir + "/summary.json"; }
    std::string records_path() const { return opts_.out_dir + "/records.jsonl"; }
    std::string trajectory_path() const { return opts_.out_dir + "/trajectory.csv"; }
    std::string checkpoint_dir() const { return opts_.out_dir + "/checkpoints"; }

private:
    struct WorkResult {
        std::vector<EpochEntry> epochs;
        std::vector<std::uint8_t> state_bytes;
        double metric = 0.0;
    };

    void emit(json event) {
        writer_->append(event);
        if (event.at("type") == "round_completed") {
            ++executed_rounds_;
            if (opts_.halt_after_rounds >= 0 && executed_rounds_ >= opts_.halt_after_rounds) {
                throw Halted{};
            }
        }
    }

    std::unique_ptr<Trainer> make_trainer(int rep) const {
        if (cfg_.trainer.kind == TrainerKind::kSurrogate) {
            return std::make_unique<SurrogateTrainer>(make_surrogate_task(cfg_, rep));
        }
        return std::make_unique<ToySgdTrainer>(blob_data_);
    }

    std::string checkpoint_stem(int rep, const Unit& unit, int trial_id) const {
        std::ostringstream ss;
        ss << "rep" << rep << "_g" << unit.generation << "_b" << unit.bracket << "_t" << trial_id;
        return ss.str();
    }

    void write_checkpoint_file(const std::string& stem, const std::vector<std::uint8_t>& bytes) {
        const std::string path = checkpoint_dir() + "/" + stem + ".bin";
        atomic_write_file(path, std::string(bytes.begin(), bytes.end()));
    }

    std::vector<std::uint8_t> read_checkpoint_file(const std::string& stem) const {
        const std::string path = checkpoint_dir() + "/" + stem + ".bin";
        if (!std::filesystem::exists(path)) {
            throw std::runtime_error("resume: missing checkpoint '" + stem +
                                     "': log/checkpoint mismatch");
        }
        const std::string raw = read_file(path);
        return std::vector<std::uint8_t>(raw.begin(), raw.end());
    }

    RepetitionResult run_repetition(int rep, EventCursor& cursor) {
        const std::uint64_t rep_seed = cfg_.base_seed + static_cast<std::uint64_t>(rep);
        if (cursor.has("rep_started")) {
            const json e = cursor.take("rep_started");
            if (e.at("rep").get<int>() != rep) throw std::runtime_error("resume: repetition mismatch");
        } else {
            emit({{"type", "rep_started"}, {"rep", rep}, {"seed", rep_seed}});
        }

        const std::unique_ptr<Trainer> trainer = make_trainer(rep);
        const std::vector<Unit> units = plan_units(cfg_);

        RepetitionResult rr;
        rr.rep = rep;
        rr.seed = rep_seed;
        BudgetLedger ledger(cfg_.budget());
        std::map<int, TrialRecord> records;
        std::vector<Observation> observations;
        std::vector<EvalPoint> evals;
        int next_trial_id = 1;

        int best_trial = 0;
        double best_metric = -1.0;
        for (const Unit& unit : units) {
            const int selected = run_unit(rep, rep_seed, unit, *trainer, cursor, ledger, records,
                                          observations, evals, next_trial_id);
            const double sel_metric = records.at(selected).deepest_metric();
            if (best_trial == 0 || sel_metric > best_metric) {
                best_trial = selected;
                best_metric = sel_metric;
            }
        }

        rr.selected_trial = best_trial;
        rr.best_config = records.at(best_trial).config;
        rr.best_metric = best_metric;
        rr.consumed = ledger.consumed();
        rr.trajectory = best_trajectory(evals);
        rr.records.reserve(records.size());
        for (auto& [id, rec] : records) rr.records.push_back(std::move(rec));

        if (cursor.has("rep_finished")) {
            cursor.take("rep_finished");
        } else {
            emit({{"type", "rep_finished"},
                  {"rep", rep},
                  {"selected_trial", rr.selected_trial},
                  {"best_metric", rr.best_metric},
                  {"best_config", config_values_to_json(rr.best_config)},
                  {"consumed_epochs", rr.consumed}});
        }
        return rr;
    }

    // Runs one halving execution. Returns the selected trial's global id.
    int run_unit(int rep, std::uint64_t rep_seed, const Unit& unit, const Trainer& trainer,
                 EventCursor& cursor, BudgetLedger& ledger, std::map<int, TrialRecord>& records,
                 std::vector<Observation>& observations, std::vector<EvalPoint>& evals,
                 int& next_trial_id) {
        const int id_offset = next_trial_id - 1;
        next_trial_id += unit.n;

        if (cursor.has("unit_started")) {
            const json e = cursor.take("unit_started");
            if (e.at("n").get<int>() != unit.n ||
                e.at("generation").get<int>() != unit.generation ||
                e.at("bracket").get<int>() != unit.bracket) {
                throw std::runtime_error("resume: unit plan mismatch against config");
            }
        } else {
            json boundaries = json::array();
            for (const auto& b : unit.plan.boundaries) boundaries.push_back(boundary_to_json(b));
            emit({{"type", "unit_started"},
                  {"rep", rep},
                  {"generation", unit.generation},
                  {"bracket", unit.bracket},
                  {"s_min", unit.plan.s_min},
                  {"mode", schedule_mode_name(unit.plan.mode)},
                  {"n", unit.n},
                  {"budget_share", unit.budget_share},
                  {"boundaries", boundaries}});
        }

        suggest_configs(rep, rep_seed, unit, cursor, records, observations, id_offset);

        HalvingScheduler scheduler(unit.plan, unit.n);
        std::map<int, std::vector<std::uint8_t>> states;  // local id -> checkpoint bytes
        bool previous_round_adopted = false;

        for (int round = 0; round < unit.plan.num_rounds(); ++round) {
            const RoundBoundary boundary = unit.plan.boundaries[round];
            const std::vector<int> active = scheduler.active_trials();
            for (int local : active) {
                records.at(id_offset + local).set_status("running@" + std::to_string(round));
            }

            if (cursor.has("round_completed")) {
                adopt_round(rep, cursor, unit, round, id_offset, active, scheduler, ledger,
                            records, evals);
                previous_round_adopted = true;
            } else {
                if (previous_round_adopted) {
                    // Frontier: pull the survivors' states off disk.
                    for (int local : active) {
                        states[local] =
                            read_checkpoint_file(checkpoint_stem(rep, unit, id_offset + local));
                    }
                    previous_round_adopted = false;
                }
                execute_round(rep, rep_seed, unit, trainer, round, boundary, id_offset, active,
                              scheduler, states, ledger, records, evals);
            }
        }

        // Scheduler has finished; final statuses and sampler feedback.
        for (int local = 1; local <= unit.n; ++local) {
            const int gid = id_offset + local;
            const TrialStatus& st = scheduler.status(local);
            auto& rec = records.at(gid);
            if (st.phase == TrialPhase::kCompleted) {
                rec.set_status("completed");
            } else if (rec.status.rfind("stopped", 0) != 0) {
                rec.set_status("stopped@" + std::to_string(st.round));
            }
            observations.push_back(Observation{rec.config, rec.deepest_metric()});
        }
        return id_offset + scheduler.selection();
    }

    void suggest_configs(int rep, std::uint64_t rep_seed, const Unit& unit, EventCursor& cursor,
                         std::map<int, TrialRecord>& records,
                         const std::vector<Observation>& observations, int id_offset) {
        RandomStream rng(derive_seed(rep_seed, {key_of("suggest"),
                                                static_cast<std::uint64_t>(unit.generation),
                                                static_cast<std::uint64_t>(unit.bracket)}));
        for (int local = 1; local <= unit.n; ++local) {
            const int gid = id_offset + local;
            TrialRecord rec;
            rec.trial_id = gid;
            rec.generation = unit.generation;
            rec.bracket = unit.bracket;
            rec.set_status("pending");

            // Always draw, even on replay, so the stream stays in step with
            // the original run regardless of where the log was cut.
            std::ostringstream prov;
            json event;
            event["type"] = "trial_suggested";
            event["rep"] = rep;
            event["trial"] = gid;
            if (cfg_.sampler.kind == SamplerKind::kTpe) {
                prov << "tpe:seed=" << rep_seed << ":g" << unit.generation << ":i" << local;
                TpeSuggestion s = tpe_suggest_ex(cfg_.space, observations, cfg_.sampler.tpe, rng,
                                                 prov.str());
                rec.config = std::move(s.config);
                if (!s.startup_fallback) event["acquisition"] = s.acquisition;
            } else {
                prov << "random:seed=" << rep_seed << ":g" << unit.generation << ":i" << local;
                rec.config = random_suggest(cfg_.space, rng, prov.str());
            }

            if (cursor.has("trial_suggested")) {
                const json e = cursor.take("trial_suggested");
                if (e.at("trial").get<int>() != gid ||
                    e.at("config") != config_values_to_json(rec.config)) {
                    throw std::runtime_error("resume: logged suggestion disagrees with replay");
                }
            } else {
                event["config"] = config_values_to_json(rec.config);
                event["provenance"] = rec.config.provenance();
                emit(std::move(event));
            }
            records.emplace(gid, std::move(rec));
        }
    }

    // Replays one logged round into the scheduler, ledger and records.
    void adopt_round(int rep, EventCursor& cursor, const Unit& unit, int round, int id_offset,
                     const std::vector<int>& active, HalvingScheduler& scheduler,
                     BudgetLedger& ledger, std::map<int, TrialRecord>& records,
                     std::vector<EvalPoint>& evals) {
        const json e = cursor.take("round_completed");
        if (e.at("round").get<int>() != round || e.at("generation").get<int>() != unit.generation ||
            e.at("bracket").get<int>() != unit.bracket) {
            throw std::runtime_error("resume: round event out of sequence");
        }
        const json& results = e.at("results");
        if (results.size() != active.size()) {
            throw std::runtime_error("resume: round result count mismatch");
        }
        for (std::size_t i = 0; i < active.size(); ++i) {
            const json& res = results[i];
            const int gid = res.at("trial").get<int>();
            if (gid != id_offset + active[i]) {
                throw std::runtime_error("resume: round trial set mismatch");
            }
            auto& rec = records.at(gid);
            for (const auto& ep : res.at("epochs")) {
                EpochEntry entry{ep.at(0).get<int>(), ep.at(1).get<double>(),
                                 ep.at(2).get<double>()};
                rec.epochs.push_back(entry);
                ledger.bill(gid, 1);
                rec.epochs_billed += 1;
                evals.push_back(EvalPoint{ledger.consumed(), entry.val_metric});
            }
            scheduler.submit(active[i], res.at("metric").get<double>());
        }
        const auto outcome = scheduler.advance();
        std::vector<int> logged_promoted;
        for (const auto& p : e.at("promoted")) logged_promoted.push_back(p.get<int>() - id_offset);
        if (logged_promoted != outcome.promoted) {
            throw std::runtime_error("resume: logged promotion disagrees with recomputation");
        }
        for (int local : outcome.promoted) {
            const int gid = id_offset + local;
            records.at(gid).checkpoint_id = checkpoint_stem(rep, unit, gid);
        }
    }

    void execute_round(int rep, std::uint64_t rep_seed, const Unit& unit, const Trainer& trainer,
                       int round, const RoundBoundary& boundary, int id_offset,
                       const std::vector<int>& active, HalvingScheduler& scheduler,
                       std::map<int, std::vector<std::uint8_t>>& states, BudgetLedger& ledger,
                       std::map<int, TrialRecord>& records, std::vector<EvalPoint>& evals) {
        const int n_active = static_cast<int>(active.size());
        std::vector<WorkResult> results(n_active);

        parallel_for(n_active, opts_.workers, [&](int i) {
            const int local = active[i];
            const int gid = id_offset + local;
            std::unique_ptr<TrainerState> state;
            if (round == 0) {
                state = trainer.init(records.at(gid).config,
                                     derive_seed(rep_seed, {key_of("trial-init"),
                                                            static_cast<std::uint64_t>(gid)}));
            } else {
                state = trainer.restore(states.at(local));
            }
            const LrSchedule sched =
                cfg_.schedule.instantiate(records.at(gid).config.get("l"), cfg_.scheduler.r);
            const CyclePlan cycle{boundary.e_start, boundary.e_end, state->steps_per_epoch()};
            WorkResult out;
            for (int epoch = boundary.e_start; epoch <= boundary.e_end; ++epoch) {
                const int base = (epoch - boundary.e_start) * cycle.steps_per_epoch;
                const EpochReport report = trainer.train_epoch(
                    *state, [&](int k) { return lr_at(sched, cycle, base + k); });
                out.epochs.push_back(EpochEntry{report.epoch, report.val_metric,
                                                report.final_step_lr});
            }
            out.metric = out.epochs.back().val_metric;
            out.state_bytes = trainer.checkpoint(*state);
            results[i] = std::move(out);
        });

        // Canonical commit order: ascending trial id, epochs in sequence.
        json results_json = json::array();
        for (int i = 0; i < n_active; ++i) {
            const int gid = id_offset + active[i];
            auto& rec = records.at(gid);
            json epochs_json = json::array();
            for (const auto& ep : results[i].epochs) {
                rec.epochs.push_back(ep);
                ledger.bill(gid, 1);
                rec.epochs_billed += 1;
                evals.push_back(EvalPoint{ledger.consumed(), ep.val_metric});
                epochs_json.push_back(json::array({ep.epoch, ep.val_metric, ep.final_step_lr}));
            }
            results_json.push_back(json{{"trial", gid},
                                        {"metric", results[i].metric},
                                        {"epochs", std::move(epochs_json)}});
            scheduler.submit(active[i], results[i].metric);
        }

        const auto outcome = scheduler.advance();

        // Persist survivor checkpoints before the round event: a round that
        // is on record must always be resumable.
        std::map<int, std::vector<std::uint8_t>> survivors;
        for (int local : outcome.promoted) {
            const int idx = static_cast<int>(
                std::find(active.begin(), active.end(), local) - active.begin());
            const int gid = id_offset + local;
            const std::string stem = checkpoint_stem(rep, unit, gid);
            write_checkpoint_file(stem, results[idx].state_bytes);
            records.at(gid).checkpoint_id = stem;
            survivors[local] = std::move(results[idx].state_bytes);
        }
        states = std::move(survivors);

        json promoted_json = json::array();
        for (int local : outcome.promoted) promoted_json.push_back(id_offset + local);
        json stopped_json = json::array();
        for (int local : outcome.stopped) stopped_json.push_back(id_offset + local);
        json event;
        event["type"] = "round_completed";
        event["rep"] = rep;
        event["generation"] = unit.generation;
        event["bracket"] = unit.bracket;
        event["round"] = round;
        event["s"] = boundary.s;
        event["e_start"] = boundary.e_start;
        event["e_end"] = boundary.e_end;
        event["results"] = std::move(results_json);
        event["promoted"] = std::move(promoted_json);
        event["stopped"] = std::move(stopped_json);
        event["finished"] = outcome.finished;
        emit(std::move(event));
    }

    void write_outputs(const ExperimentResult& result) {
        // summary.json
        json summary;
        summary["mean_best_metric"] = result.mean_best;
        summary["ci95_halfwidth"] = result.ci95_halfwidth;
        json reps = json::array();
        const RepetitionResult* best_rep = nullptr;
        for (const auto& rr : result.repetitions) {
            if (best_rep == nullptr || rr.best_metric > best_rep->best_metric) best_rep = &rr;
            reps.push_back(json{{"rep", rr.rep},
                                {"seed", rr.seed},
                                {"selected_trial", rr.selected_trial},
                                {"best_metric", rr.best_metric},
                                {"best_config", config_values_to_json(rr.best_config)},
                                {"consumed_epochs", rr.consumed}});
        }
        summary["repetitions"] = std::move(reps);
        summary["best"] = json{{"rep", best_rep->rep},
                               {"metric", best_rep->best_metric},
                               {"config", config_values_to_json(best_rep->best_config)}};
        atomic_write_file(summary_path(), summary.dump(2) + "\n");

        // records.jsonl
        std::ostringstream rec_out;
        for (const auto& rr : result.repetitions) {
            for (const auto& rec : rr.records) {
                json epochs = json::array();
                for (const auto& ep : rec.epochs) {
                    epochs.push_back(json::array({ep.epoch, ep.val_metric, ep.final_step_lr}));
                }
                json line{{"rep", rr.rep},
                          {"trial", rec.trial_id},
                          {"generation", rec.generation},
                          {"bracket", rec.bracket},
                          {"config", config_values_to_json(rec.config)},
                          {"provenance", rec.config.provenance()},
                          {"status", rec.status},
                          {"status_history", rec.status_history},
                          {"epochs", std::move(epochs)},
                          {"epochs_billed", rec.epochs_billed},
                          {"checkpoint", rec.checkpoint_id}};
                rec_out << line.dump() << '\n';
            }
        }
        atomic_write_file(records_path(), rec_out.str());

        // trajectory.csv
        std::ostringstream csv;
        csv << "consumed_epochs,best_metric\n";
        for (const auto& rr : result.repetitions) {
            for (const auto& [x, y] : rr.trajectory) {
                csv << x << ',' << format_value(y) << '\n';
            }
        }
        atomic_write_file(trajectory_path(), csv.str());
    }

    ExperimentConfig cfg_;
    RunOptions opts_;
    BlobDataset blob_data_;
    std::unique_ptr<EventWriter> writer_;
    int executed_rounds_ = 0;
};

}  // namespace run_detail

inline ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
    if (std::filesystem::exists(opts.out_dir + "/events.jsonl")) {
        throw std::runtime_error("output dir already holds an event log; resume it or use a "
                                 "clean directory");
    }
    run_detail::Engine engine(cfg, opts);
    log_info("experiment started: scheduler=" + scheduler_kind_name(cfg.scheduler.kind) +
             " budget=" + std::to_string(cfg.budget()) + " epochs");
    ExperimentResult result = engine.run({});
    if (result.completed) log_info("experiment finished");
    return result;
}

// Replays the event log under out_dir, restores checkpoints, and continues.
// A completed run is a no-op that just rebuilds the stored result.
inline ExperimentResult resume_experiment(const std::string& out_dir, int workers = 1) {
    const std::string events_file = out_dir + "/events.jsonl";
    const std::vector<json> events = read_events(events_file);
    if (events.empty() || events.front().value("type", "") != "run_started") {
        throw std::runtime_error("resume: event log has no run_started record");
    }
    const ExperimentConfig cfg = experiment_config_from_json(events.front().at("config"));
    RunOptions opts;
    opts.out_dir = out_dir;
    opts.workers = workers;
    run_detail::Engine engine(cfg, opts);
    log_info("resuming from " + events_file + " (" + std::to_string(events.size()) + " events)");
    return engine.run(events);
}

}  // namespace mfo
