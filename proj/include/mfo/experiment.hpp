#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "mfo/lr_schedule.hpp"
#include "mfo/sampler.hpp"
#include "mfo/scheduler.hpp"
#include "mfo/search_space.hpp"
#include "mfo/surrogate.hpp"

namespace mfo {

using json = nlohmann::json;

// Raised for anything wrong with an experiment description; the CLI maps it
// to exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

enum class SchedulerKind { kMorl, kSha, kHyperband, kRandomSearch };

inline std::string scheduler_kind_name(SchedulerKind k) {
    switch (k) {
        case SchedulerKind::kMorl: return "morl";
        case SchedulerKind::kSha: return "sha";
        case SchedulerKind::kHyperband: return "hyperband";
        case SchedulerKind::kRandomSearch: return "random";
    }
    return "?";
}

inline SchedulerKind scheduler_kind_from_name(const std::string& name) {
    if (name == "morl") return SchedulerKind::kMorl;
    if (name == "sha") return SchedulerKind::kSha;
    if (name == "hyperband") return SchedulerKind::kHyperband;
    if (name == "random") return SchedulerKind::kRandomSearch;
    throw ConfigError("unknown scheduler kind: " + name);
}

struct SchedulerSpec {
    SchedulerKind kind = SchedulerKind::kMorl;
    int eta = 3;
    int s_min = 2;
    int r = 81;
    // Hyperband only: which inner loop runs each bracket.
    SchedulerKind inner = SchedulerKind::kMorl;
};

struct ScheduleSpec {
    ScheduleKind kind = ScheduleKind::kCosineRecurring;
    std::vector<double> milestone_fractions = baseline_step_fractions();
    double factor = 0.1;
    double floor_fraction = 0.0;
    std::vector<int> milestone_epochs;  // full-horizon step; empty = scaled from fractions

    // Concrete schedule for one trial: the searched learning rate becomes
    // the initial rate, the scheduler's r becomes the horizon.
    LrSchedule instantiate(double init_lr, int r) const {
        LrSchedule s;
        s.kind = kind;
        s.init_lr = init_lr;
        s.milestone_fractions = milestone_fractions;
        s.factor = factor;
        s.floor_fraction = floor_fraction;
        s.horizon_epochs = r;
        s.milestone_epochs =
            milestone_epochs.empty() ? scaled_step_milestones(r, milestone_fractions)
                                     : milestone_epochs;
        s.validate();
        return s;
    }
};

enum class SamplerKind { kRandom, kTpe };

struct SamplerSpec {
    SamplerKind kind = SamplerKind::kRandom;
    TpeParams tpe;
    int generations = 1;  // suggestion batches; later batches condition on finished trials
};

enum class TrainerKind { kSurrogate, kToySgd };

struct TrainerSpec {
    TrainerKind kind = TrainerKind::kSurrogate;
    SurrogateParams surrogate;
    int blob_total = 2000;
    int blob_holdout = 500;
    double blob_spread = 0.6;
};

struct ExperimentConfig {
    SearchSpace space = default_space();
    SchedulerSpec scheduler;
    ScheduleSpec schedule;
    SamplerSpec sampler;
    TrainerSpec trainer;
    std::uint64_t budget_epochs = 0;  // explicit epoch budget; 0 = multiplier * r
    int budget_multiplier = 64;
    int repetitions = 5;
    std::uint64_t base_seed = 1;

    std::uint64_t budget() const {
        return budget_epochs != 0
                   ? budget_epochs
                   : static_cast<std::uint64_t>(budget_multiplier) *
                         static_cast<std::uint64_t>(scheduler.r);
    }
};

namespace cfg_detail {

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config field '" + key + "' has the wrong type");
    }
}

inline const json& require(const json& j, const std::string& key) {
    if (!j.contains(key)) throw ConfigError("config is missing required field '" + key + "'");
    return j.at(key);
}

}  // namespace cfg_detail

inline SearchSpace space_from_json(const json& j) {
    if (j.is_string() && j.get<std::string>() == "default") return default_space();
    if (!j.is_array()) throw ConfigError("space must be \"default\" or a list of dimensions");
    SearchSpace space;
    for (const auto& dim : j) {
        const std::string name = cfg_detail::require(dim, "name").get<std::string>();
        const std::string type = cfg_detail::require(dim, "type").get<std::string>();
        try {
            if (type == "loguniform") {
                space.add(name, ParamDomain::log_uniform(cfg_detail::require(dim, "lo").get<double>(),
                                                         cfg_detail::require(dim, "hi").get<double>()));
            } else if (type == "uniform") {
                space.add(name, ParamDomain::uniform(cfg_detail::require(dim, "lo").get<double>(),
                                                     cfg_detail::require(dim, "hi").get<double>()));
            } else if (type == "int") {
                space.add(name,
                          ParamDomain::int_uniform(cfg_detail::require(dim, "lo").get<std::int64_t>(),
                                                   cfg_detail::require(dim, "hi").get<std::int64_t>()));
            } else {
                throw ConfigError("unknown domain type: " + type);
            }
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("invalid domain for '") + name + "': " + e.what());
        }
    }
    if (space.size() == 0) throw ConfigError("space has no dimensions");
    return space;
}

inline json space_to_json(const SearchSpace& space) {
    json out = json::array();
    for (std::size_t i = 0; i < space.size(); ++i) {
        const ParamDomain& d = space.domain(i);
        json dim;
        dim["name"] = space.name(i);
        switch (d.kind()) {
            case DomainKind::kLogUniform:
                dim["type"] = "loguniform";
                dim["lo"] = d.lo();
                dim["hi"] = d.hi();
                break;
            case DomainKind::kUniform:
                dim["type"] = "uniform";
                dim["lo"] = d.lo();
                dim["hi"] = d.hi();
                break;
            case DomainKind::kIntUniform:
                dim["type"] = "int";
                dim["lo"] = static_cast<std::int64_t>(d.lo());
                dim["hi"] = static_cast<std::int64_t>(d.hi());
                break;
        }
        out.push_back(dim);
    }
    return out;
}

inline json config_values_to_json(const Config& c) {
    json out = json::object();
    for (std::size_t i = 0; i < c.size(); ++i) {
        out[c.at(i).first] = format_value(c.at(i).second);
    }
    return out;
}

inline Config config_from_json(const SearchSpace& space, const json& values,
                               const std::string& provenance) {
    std::vector<std::pair<std::string, double>> vals;
    for (std::size_t i = 0; i < space.size(); ++i) {
        const std::string& name = space.name(i);
        if (!values.contains(name)) throw ConfigError("config values missing dimension " + name);
        vals.emplace_back(name, parse_value(values.at(name).get<std::string>()));
    }
    return Config(std::move(vals), provenance);
}

inline ExperimentConfig experiment_config_from_json(const json& j) {
    ExperimentConfig cfg;
    if (j.contains("space")) cfg.space = space_from_json(j.at("space"));

    const json& sch = cfg_detail::require(j, "scheduler");
    cfg.scheduler.kind = scheduler_kind_from_name(cfg_detail::require(sch, "kind").get<std::string>());
    cfg.scheduler.eta = cfg_detail::get_or(sch, "eta", 3);
    cfg.scheduler.s_min = cfg_detail::get_or(sch, "s_min", 2);
    cfg.scheduler.r = static_cast<int>(cfg_detail::require(sch, "r").get<std::int64_t>());
    if (sch.contains("inner")) {
        cfg.scheduler.inner = scheduler_kind_from_name(sch.at("inner").get<std::string>());
    }

    if (j.contains("schedule")) {
        const json& s = j.at("schedule");
        if (s.contains("kind")) {
            try {
                cfg.schedule.kind = schedule_kind_from_name(s.at("kind").get<std::string>());
            } catch (const std::invalid_argument& e) {
                throw ConfigError(e.what());
            }
        }
        cfg.schedule.milestone_fractions =
            cfg_detail::get_or(s, "milestone_fractions", cfg.schedule.milestone_fractions);
        cfg.schedule.factor = cfg_detail::get_or(s, "factor", cfg.schedule.factor);
        cfg.schedule.floor_fraction =
            cfg_detail::get_or(s, "floor_fraction", cfg.schedule.floor_fraction);
        cfg.schedule.milestone_epochs =
            cfg_detail::get_or(s, "milestone_epochs", cfg.schedule.milestone_epochs);
    } else {
        // A sensible default per scheduler family.
        cfg.schedule.kind = (cfg.scheduler.kind == SchedulerKind::kSha ||
                             cfg.scheduler.kind == SchedulerKind::kRandomSearch ||
                             (cfg.scheduler.kind == SchedulerKind::kHyperband &&
                              cfg.scheduler.inner == SchedulerKind::kSha))
                                ? ScheduleKind::kFullHorizonStep
                                : ScheduleKind::kCosineRecurring;
    }

    if (j.contains("sampler")) {
        const json& s = j.at("sampler");
        const std::string kind = cfg_detail::get_or<std::string>(s, "kind", "random");
        if (kind == "random") {
            cfg.sampler.kind = SamplerKind::kRandom;
        } else if (kind == "tpe") {
            cfg.sampler.kind = SamplerKind::kTpe;
        } else {
            throw ConfigError("unknown sampler kind: " + kind);
        }
        cfg.sampler.tpe.gamma = cfg_detail::get_or(s, "gamma", cfg.sampler.tpe.gamma);
        cfg.sampler.tpe.n_startup = cfg_detail::get_or(s, "n_startup", cfg.sampler.tpe.n_startup);
        cfg.sampler.tpe.n_candidates =
            cfg_detail::get_or(s, "n_candidates", cfg.sampler.tpe.n_candidates);
        cfg.sampler.tpe.multivariate =
            cfg_detail::get_or(s, "multivariate", cfg.sampler.tpe.multivariate);
        cfg.sampler.generations = cfg_detail::get_or(
            s, "generations", cfg.sampler.kind == SamplerKind::kTpe ? 4 : 1);
    }

    if (j.contains("trainer")) {
        const json& t = j.at("trainer");
        const std::string kind = cfg_detail::get_or<std::string>(t, "kind", "surrogate");
        if (kind == "surrogate") {
            cfg.trainer.kind = TrainerKind::kSurrogate;
            SurrogateParams& p = cfg.trainer.surrogate;
            p.a_min = cfg_detail::get_or(t, "a_min", p.a_min);
            p.a_max = cfg_detail::get_or(t, "a_max", p.a_max);
            p.kappa = cfg_detail::get_or(t, "kappa", p.kappa);
            p.beta = cfg_detail::get_or(t, "beta", p.beta);
            p.sigma_l = cfg_detail::get_or(t, "sigma_l", p.sigma_l);
            p.sigma_w = cfg_detail::get_or(t, "sigma_w", p.sigma_w);
            p.sigma_noise = cfg_detail::get_or(t, "sigma_noise", p.sigma_noise);
            p.chance_level = cfg_detail::get_or(t, "chance_level", p.chance_level);
            p.steps_per_epoch = cfg_detail::get_or(t, "steps_per_epoch", p.steps_per_epoch);
            p.l_ref = cfg_detail::get_or(t, "l_ref", p.l_ref);
            p.lstar_lo = cfg_detail::get_or(t, "lstar_lo", p.lstar_lo);
            p.lstar_hi = cfg_detail::get_or(t, "lstar_hi", p.lstar_hi);
            p.wstar_lo = cfg_detail::get_or(t, "wstar_lo", p.wstar_lo);
            p.wstar_hi = cfg_detail::get_or(t, "wstar_hi", p.wstar_hi);
        } else if (kind == "toy_sgd") {
            cfg.trainer.kind = TrainerKind::kToySgd;
            cfg.trainer.blob_total = cfg_detail::get_or(t, "points", cfg.trainer.blob_total);
            cfg.trainer.blob_holdout = cfg_detail::get_or(t, "holdout", cfg.trainer.blob_holdout);
            cfg.trainer.blob_spread = cfg_detail::get_or(t, "spread", cfg.trainer.blob_spread);
        } else {
            throw ConfigError("unknown trainer kind: " + kind);
        }
    }

    cfg.budget_epochs = cfg_detail::get_or<std::uint64_t>(j, "budget_epochs", 0);
    cfg.budget_multiplier = cfg_detail::get_or(j, "budget_multiplier", 64);
    cfg.repetitions = cfg_detail::get_or(j, "repetitions", 5);
    cfg.base_seed = cfg_detail::get_or<std::uint64_t>(j, "base_seed", 1);
    return cfg;
}

inline json experiment_config_to_json(const ExperimentConfig& cfg) {
    json j;
    j["space"] = space_to_json(cfg.space);
    j["scheduler"] = {{"kind", scheduler_kind_name(cfg.scheduler.kind)},
                      {"eta", cfg.scheduler.eta},
                      {"s_min", cfg.scheduler.s_min},
                      {"r", cfg.scheduler.r},
                      {"inner", scheduler_kind_name(cfg.scheduler.inner)}};
    j["schedule"] = {{"kind", schedule_kind_name(cfg.schedule.kind)},
                     {"milestone_fractions", cfg.schedule.milestone_fractions},
                     {"factor", cfg.schedule.factor},
                     {"floor_fraction", cfg.schedule.floor_fraction},
                     {"milestone_epochs", cfg.schedule.milestone_epochs}};
    j["sampler"] = {{"kind", cfg.sampler.kind == SamplerKind::kTpe ? "tpe" : "random"},
                    {"gamma", cfg.sampler.tpe.gamma},
                    {"n_startup", cfg.sampler.tpe.n_startup},
                    {"n_candidates", cfg.sampler.tpe.n_candidates},
                    {"multivariate", cfg.sampler.tpe.multivariate},
                    {"generations", cfg.sampler.generations}};
    if (cfg.trainer.kind == TrainerKind::kSurrogate) {
        const SurrogateParams& p = cfg.trainer.surrogate;
        j["trainer"] = {{"kind", "surrogate"},
                        {"a_min", p.a_min},
                        {"a_max", p.a_max},
                        {"kappa", p.kappa},
                        {"beta", p.beta},
                        {"sigma_l", p.sigma_l},
                        {"sigma_w", p.sigma_w},
                        {"sigma_noise", p.sigma_noise},
                        {"chance_level", p.chance_level},
                        {"steps_per_epoch", p.steps_per_epoch},
                        {"l_ref", p.l_ref},
                        {"lstar_lo", p.lstar_lo},
                        {"lstar_hi", p.lstar_hi},
                        {"wstar_lo", p.wstar_lo},
                        {"wstar_hi", p.wstar_hi}};
    } else {
        j["trainer"] = {{"kind", "toy_sgd"},
                        {"points", cfg.trainer.blob_total},
                        {"holdout", cfg.trainer.blob_holdout},
                        {"spread", cfg.trainer.blob_spread}};
    }
    j["budget_epochs"] = cfg.budget_epochs;
    j["budget_multiplier"] = cfg.budget_multiplier;
    j["repetitions"] = cfg.repetitions;
    j["base_seed"] = cfg.base_seed;
    return j;
}

// Cross-field checks plus feasibility of the plan/budget arithmetic.
inline void validate_experiment(const ExperimentConfig& cfg) {
    if (cfg.repetitions < 1) throw ConfigError("repetitions must be >= 1");
    if (cfg.scheduler.r < 1) throw ConfigError("scheduler r must be >= 1");
    if (cfg.scheduler.eta < 2) throw ConfigError("scheduler eta must be >= 2");
    if (cfg.budget_epochs == 0 && cfg.budget_multiplier < 1) {
        throw ConfigError("budget_multiplier must be >= 1");
    }

    const bool recurring = is_recurring(cfg.schedule.kind);
    switch (cfg.scheduler.kind) {
        case SchedulerKind::kMorl:
            if (!recurring) throw ConfigError("morl requires a recurring schedule kind");
            break;
        case SchedulerKind::kSha:
        case SchedulerKind::kRandomSearch:
            if (recurring) {
                throw ConfigError(scheduler_kind_name(cfg.scheduler.kind) +
                                  " requires a full-horizon schedule kind");
            }
            break;
        case SchedulerKind::kHyperband:
            if (cfg.scheduler.inner != SchedulerKind::kMorl &&
                cfg.scheduler.inner != SchedulerKind::kSha) {
                throw ConfigError("hyperband inner loop must be morl or sha");
            }
            if ((cfg.scheduler.inner == SchedulerKind::kMorl) != recurring) {
                throw ConfigError("hyperband inner loop and schedule kind disagree");
            }
            break;
    }

    try {
        cfg.schedule.instantiate(0.1, cfg.scheduler.r);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("invalid schedule: ") + e.what());
    }

    if (!cfg.space.find("l").has_value() || !cfg.space.find("w").has_value()) {
        throw ConfigError("search space must contain dimensions 'l' and 'w'");
    }
    if (cfg.trainer.kind == TrainerKind::kToySgd &&
        (!cfg.space.find("m").has_value() || !cfg.space.find("b").has_value())) {
        throw ConfigError("toy_sgd trainer needs dimensions 'm' and 'b'");
    }
    if (cfg.trainer.kind == TrainerKind::kSurrogate) {
        try {
            SurrogateParams p = cfg.trainer.surrogate;
            p.horizon_epochs = cfg.scheduler.r;
            p.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("invalid surrogate params: ") + e.what());
        }
    }

    const int generations = std::max(1, cfg.sampler.generations);
    const std::uint64_t per_generation = cfg.budget() / static_cast<std::uint64_t>(generations);
    try {
        switch (cfg.scheduler.kind) {
            case SchedulerKind::kMorl:
            case SchedulerKind::kSha: {
                const auto mode = cfg.scheduler.kind == SchedulerKind::kMorl
                                      ? ScheduleMode::kRecurring
                                      : ScheduleMode::kFullHorizon;
                solve_n(per_generation, RoundPlan::make(cfg.scheduler.eta, cfg.scheduler.s_min,
                                                        cfg.scheduler.r, mode));
                break;
            }
            case SchedulerKind::kHyperband: {
                const auto mode = cfg.scheduler.inner == SchedulerKind::kMorl
                                      ? ScheduleMode::kRecurring
                                      : ScheduleMode::kFullHorizon;
                hyperband_plan(per_generation, cfg.scheduler.eta, cfg.scheduler.r, mode);
                break;
            }
            case SchedulerKind::kRandomSearch:
                if (per_generation < static_cast<std::uint64_t>(cfg.scheduler.r)) {
                    throw std::invalid_argument("budget below one full training");
                }
                break;
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("infeasible plan/budget: ") + e.what());
    }
}

}  // namespace mfo
