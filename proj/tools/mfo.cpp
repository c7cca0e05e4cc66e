#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "mfo/event_log.hpp"
#include "mfo/experiment.hpp"
#include "mfo/io.hpp"
#include "mfo/lr_schedule.hpp"
#include "mfo/runner.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

mfo::ExperimentConfig load_config(const std::string& path) {
    mfo::json parsed;
    try {
        parsed = mfo::json::parse(mfo::read_file(path));
    } catch (const mfo::json::exception& e) {
        throw mfo::ConfigError("config file " + path + ": " + e.what());
    } catch (const std::runtime_error& e) {
        throw mfo::ConfigError(e.what());
    }
    mfo::ExperimentConfig cfg = mfo::experiment_config_from_json(parsed);
    mfo::validate_experiment(cfg);
    return cfg;
}

int cmd_run(const std::string& config_path, const std::string& out_dir, int workers,
            std::optional<std::uint64_t> seed, bool do_resume) {
    if (do_resume) {
        mfo::resume_experiment(out_dir, workers);
        return kExitOk;
    }
    mfo::ExperimentConfig cfg = load_config(config_path);
    if (seed.has_value()) cfg.base_seed = *seed;
    mfo::RunOptions opts;
    opts.out_dir = out_dir;
    opts.workers = workers;
    mfo::run_experiment(cfg, opts);
    return kExitOk;
}

int cmd_compare(const std::string& spec_path, const std::string& out_dir, int workers) {
    mfo::json spec;
    try {
        spec = mfo::json::parse(mfo::read_file(spec_path));
    } catch (const mfo::json::exception& e) {
        throw mfo::ConfigError(std::string("compare spec: ") + e.what());
    } catch (const std::runtime_error& e) {
        throw mfo::ConfigError(e.what());
    }
    if (!spec.contains("labels") || !spec.at("labels").is_array() || spec.at("labels").empty()) {
        throw mfo::ConfigError("compare spec needs a non-empty 'labels' array");
    }

    struct Entry {
        std::string label;
        mfo::ExperimentConfig cfg;
    };
    std::vector<Entry> entries;
    std::map<std::string, bool> seen;
    for (const auto& item : spec.at("labels")) {
        Entry e;
        e.label = item.at("label").get<std::string>();
        if (seen[e.label]) throw mfo::ConfigError("duplicate label: " + e.label);
        seen[e.label] = true;
        e.cfg = mfo::experiment_config_from_json(item.at("config"));
        if (spec.contains("base_seed")) {
            e.cfg.base_seed = spec.at("base_seed").get<std::uint64_t>();
        }
        mfo::validate_experiment(e.cfg);
        entries.push_back(std::move(e));
    }

    // Apples-to-apples guard: identical horizon and trainer across labels.
    const mfo::json trainer0 = mfo::experiment_config_to_json(entries.front().cfg).at("trainer");
    for (const auto& e : entries) {
        if (e.cfg.scheduler.r != entries.front().cfg.scheduler.r) {
            throw mfo::ConfigError("compare: labels disagree on r");
        }
        if (mfo::experiment_config_to_json(e.cfg).at("trainer") != trainer0) {
            throw mfo::ConfigError("compare: labels disagree on the trainer spec");
        }
    }

    mfo::ensure_dir(out_dir);
    std::ostringstream merged;
    merged << "label,repetition,consumed_epochs,best_metric\n";
    std::ostringstream table;
    table << "label,mean,ci_halfwidth\n";
    for (const auto& e : entries) {
        mfo::RunOptions opts;
        opts.out_dir = out_dir + "/" + e.label;
        opts.workers = workers;
        mfo::log_info("compare: running label '" + e.label + "'");
        const mfo::ExperimentResult result = mfo::run_experiment(e.cfg, opts);
        for (const auto& rr : result.repetitions) {
            for (const auto& [x, y] : rr.trajectory) {
                merged << e.label << ',' << rr.rep << ',' << x << ',' << mfo::format_value(y)
                       << '\n';
            }
        }
        table << e.label << ',' << mfo::format_value(result.mean_best) << ','
              << mfo::format_value(result.ci95_halfwidth) << '\n';
    }
    mfo::atomic_write_file(out_dir + "/compare.csv", merged.str());
    mfo::atomic_write_file(out_dir + "/summary.csv", table.str());
    return kExitOk;
}

int cmd_curves(const std::string& kind_name, int r, int eta, int s_min, double lr,
               int steps_per_epoch, double factor, double floor_fraction,
               const std::string& out_file) {
    mfo::LrSchedule sched;
    try {
        sched.kind = mfo::schedule_kind_from_name(kind_name);
    } catch (const std::invalid_argument& e) {
        throw mfo::ConfigError(e.what());
    }
    sched.init_lr = lr;
    sched.factor = factor;
    sched.floor_fraction = floor_fraction;
    sched.horizon_epochs = r;
    sched.milestone_epochs = mfo::scaled_step_milestones(r, sched.milestone_fractions);
    try {
        sched.validate();
    } catch (const std::invalid_argument& e) {
        throw mfo::ConfigError(e.what());
    }

    std::vector<mfo::RoundBoundary> cycles;
    if (mfo::is_recurring(sched.kind)) {
        try {
            cycles = mfo::round_boundaries(eta, s_min, r);
        } catch (const std::invalid_argument& e) {
            throw mfo::ConfigError(e.what());
        }
    } else {
        cycles = {mfo::RoundBoundary{0, 1, r}};
    }

    std::ostringstream csv;
    csv << "global_step,lr\n";
    std::int64_t global_step = 0;
    for (const auto& b : cycles) {
        const mfo::CyclePlan cycle{b.e_start, b.e_end, steps_per_epoch};
        for (int k = 0; k < cycle.total_steps(); ++k) {
            csv << global_step++ << ',' << mfo::format_value(mfo::lr_at(sched, cycle, k)) << '\n';
        }
    }
    mfo::atomic_write_file(out_file, csv.str());
    return kExitOk;
}

int cmd_inspect(const std::string& summary_path) {
    mfo::json summary;
    try {
        summary = mfo::json::parse(mfo::read_file(summary_path));
    } catch (const std::exception& e) {
        throw mfo::ConfigError(std::string("cannot read summary: ") + e.what());
    }
    std::cout << "mean best metric : " << summary.at("mean_best_metric").get<double>() << "\n";
    std::cout << "95% CI halfwidth : " << summary.at("ci95_halfwidth").get<double>() << "\n";
    const auto& best = summary.at("best");
    std::cout << "best repetition  : " << best.at("rep").get<int>() << " (metric "
              << best.at("metric").get<double>() << ")\n";
    std::cout << "best config      :\n";
    for (const auto& [key, value] : best.at("config").items()) {
        std::cout << "  " << key << " = " << value.get<std::string>() << "\n";
    }
    std::cout << "repetitions:\n";
    for (const auto& rr : summary.at("repetitions")) {
        std::cout << "  rep " << rr.at("rep").get<int>() << ": best "
                  << rr.at("best_metric").get<double>() << ", consumed "
                  << rr.at("consumed_epochs").get<std::uint64_t>() << " epochs (trial "
                  << rr.at("selected_trial").get<int>() << ")\n";
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-fidelity hyperparameter optimization engine"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::string spec_path;
    std::string out_file;
    std::string summary_path;
    std::string schedule_kind = "cosine_recurring";
    int workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    std::optional<std::uint64_t> seed;
    bool do_resume = false;
    int r = 164;
    int eta = 3;
    int s_min = 2;
    double lr = 0.1;
    int steps_per_epoch = 1;
    double factor = 0.1;
    double floor_fraction = 0.0;

    auto* run = app.add_subcommand("run", "run one experiment from a config file");
    run->add_option("--config", config_path, "experiment config (JSON)");
    run->add_option("--out", out_dir, "output directory")->required();
    run->add_option("--workers", workers, "worker threads for round execution");
    run->add_option("--seed", seed, "override the config's base seed");
    run->add_flag("--resume", do_resume, "resume from the event log in --out");

    auto* compare = app.add_subcommand("compare", "run labeled methods and merge trajectories");
    compare->add_option("--spec", spec_path, "compare spec (JSON)")->required();
    compare->add_option("--out", out_dir, "output directory")->required();
    compare->add_option("--workers", workers, "worker threads for round execution");

    auto* curves = app.add_subcommand("curves", "dump a (global_step, lr) CSV for a schedule");
    curves->add_option("--schedule", schedule_kind, "schedule kind");
    curves->add_option("--r", r, "maximum resource in epochs");
    curves->add_option("--eta", eta, "reduction factor");
    curves->add_option("--smin", s_min, "minimum exponent");
    curves->add_option("--lr", lr, "initial learning rate");
    curves->add_option("--steps-per-epoch", steps_per_epoch, "step resolution");
    curves->add_option("--factor", factor, "step decay factor");
    curves->add_option("--floor-fraction", floor_fraction, "cyclical floor fraction");
    curves->add_option("--out", out_file, "output CSV file")->required();

    auto* inspect = app.add_subcommand("inspect", "pretty-print a summary JSON");
    inspect->add_option("summary", summary_path, "path to summary.json")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (run->parsed()) {
            if (!do_resume && config_path.empty()) {
                throw mfo::ConfigError("run: --config is required unless --resume is given");
            }
            return cmd_run(config_path, out_dir, workers, seed, do_resume);
        }
        if (compare->parsed()) return cmd_compare(spec_path, out_dir, workers);
        if (curves->parsed()) {
            return cmd_curves(schedule_kind, r, eta, s_min, lr, steps_per_epoch, factor,
                              floor_fraction, out_file);
        }
        if (inspect->parsed()) return cmd_inspect(summary_path);
    } catch (const mfo::ConfigError& e) {
        mfo::log_error(e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        mfo::log_error(e.what());
        return kExitRuntime;
    }
    return kExitOk;
}
