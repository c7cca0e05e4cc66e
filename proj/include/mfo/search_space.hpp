#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mfo/rng.hpp"

namespace mfo {

enum class DomainKind { kLogUniform, kUniform, kIntUniform };

// One hyperparameter domain. Integer domains are inclusive on both ends.
class ParamDomain {
public:
    static ParamDomain log_uniform(double lo, double hi) {
        if (!(lo > 0.0)) throw std::invalid_argument("log_uniform: lo must be > 0");
        check_bounds(lo, hi);
        return ParamDomain(DomainKind::kLogUniform, lo, hi);
    }

    static ParamDomain uniform(double lo, double hi) {
        check_bounds(lo, hi);
        return ParamDomain(DomainKind::kUniform, lo, hi);
    }

    static ParamDomain int_uniform(std::int64_t lo, std::int64_t hi) {
        check_bounds(static_cast<double>(lo), static_cast<double>(hi));
        return ParamDomain(DomainKind::kIntUniform, static_cast<double>(lo), static_cast<double>(hi));
    }

    DomainKind kind() const { return kind_; }
    double lo() const { return lo_; }
    double hi() const { return hi_; }

    bool contains(double v) const { return v >= lo_ && v <= hi_; }

    // Maps an in-domain value onto [0, 1]. Log domains map in log space.
    double to_unit(double v) const {
        if (!contains(v)) throw std::invalid_argument("to_unit: value outside domain");
        switch (kind_) {
            case DomainKind::kLogUniform:
                return (std::log(v) - std::log(lo_)) / (std::log(hi_) - std::log(lo_));
            case DomainKind::kUniform:
            case DomainKind::kIntUniform:
                return (v - lo_) / (hi_ - lo_);
        }
        return 0.0;
    }

    // Inverse of to_unit. Integer domains round half-up.
    double from_unit(double u) const {
        if (!(u >= 0.0 && u <= 1.0)) throw std::invalid_argument("from_unit: u outside [0, 1]");
        switch (kind_) {
            case DomainKind::kLogUniform:
                return std::exp(std::log(lo_) + u * (std::log(hi_) - std::log(lo_)));
            case DomainKind::kUniform:
                return lo_ + u * (hi_ - lo_);
            case DomainKind::kIntUniform:
                return std::floor(lo_ + u * (hi_ - lo_) + 0.5);
        }
        return 0.0;
    }

    double sample(RandomStream& rng) const {
        switch (kind_) {
            case DomainKind::kLogUniform:
            case DomainKind::kUniform:
                return from_unit(rng.uniform01());
            case DomainKind::kIntUniform:
                return static_cast<double>(rng.uniform_int(static_cast<std::int64_t>(lo_),
                                                           static_cast<std::int64_t>(hi_)));
        }
        return 0.0;
    }

private:
    ParamDomain(DomainKind kind, double lo, double hi) : kind_(kind), lo_(lo), hi_(hi) {}

    static void check_bounds(double lo, double hi) {
        if (!(lo < hi)) throw std::invalid_argument("domain: lo must be < hi");
    }

    DomainKind kind_;
    double lo_;
    double hi_;
};

// Ordered, uniquely named list of domains. The order defines the vector
// layout used by the TPE sampler.
class SearchSpace {
public:
    void add(std::string name, ParamDomain domain) {
        if (find(name).has_value()) {
            throw std::invalid_argument("search space: duplicate dimension '" + name + "'");
        }
        dims_.emplace_back(std::move(name), domain);
    }

    std::size_t size() const { return dims_.size(); }
    const std::string& name(std::size_t i) const { return dims_.at(i).first; }
    const ParamDomain& domain(std::size_t i) const { return dims_.at(i).second; }

    std::optional<std::size_t> find(const std::string& name) const {
        for (std::size_t i = 0; i < dims_.size(); ++i) {
            if (dims_[i].first == name) return i;
        }
        return std::nullopt;
    }

private:
    std::vector<std::pair<std::string, ParamDomain>> dims_;
};

// The standard four-dimensional space: learning rate l, weight decay w,
// momentum complement m (trainers use 1 - m), batch size b.
inline SearchSpace default_space() {
    SearchSpace space;
    space.add("l", ParamDomain::log_uniform(1e-6, 10.0));
    space.add("w", ParamDomain::log_uniform(1e-6, 10.0));
    space.add("m", ParamDomain::log_uniform(1e-6, 1.0));
    space.add("b", ParamDomain::int_uniform(16, 256));
    return space;
}

// Decimal string with 17 significant digits; round-trips doubles exactly,
// which is what makes logged configurations replayable bit-for-bit.
inline std::string format_value(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
}

inline double parse_value(const std::string& s) {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("bad numeric literal: " + s);
    return v;
}

// One sampled point: a value per dimension plus a provenance tag recording
// which sampler/seed produced it.
class Config {
public:
    Config() = default;
    Config(std::vector<std::pair<std::string, double>> values, std::string provenance)
        : values_(std::move(values)), provenance_(std::move(provenance)) {}

    double get(const std::string& name) const {
        for (const auto& [k, v] : values_) {
            if (k == name) return v;
        }
        throw std::invalid_argument("config: missing dimension '" + name + "'");
    }

    bool has(const std::string& name) const {
        for (const auto& [k, v] : values_) {
            if (k == name) return true;
        }
        return false;
    }

    std::size_t size() const { return values_.size(); }
    const std::pair<std::string, double>& at(std::size_t i) const { return values_.at(i); }
    const std::string& provenance() const { return provenance_; }

    bool operator==(const Config& other) const { return values_ == other.values_; }

private:
    std::vector<std::pair<std::string, double>> values_;
    std::string provenance_;
};

inline void validate_config(const SearchSpace& space, const Config& config) {
    if (config.size() != space.size()) {
        throw std::invalid_argument("config: dimension count mismatch");
    }
    for (std::size_t i = 0; i < space.size(); ++i) {
        const double v = config.get(space.name(i));
        if (!space.domain(i).contains(v)) {
            throw std::invalid_argument("config: value for '" + space.name(i) + "' outside domain");
        }
    }
}

// Independent draw per dimension.
inline Config sample(const SearchSpace& space, RandomStream& rng, std::string provenance = "random") {
    std::vector<std::pair<std::string, double>> values;
    values.reserve(space.size());
    for (std::size_t i = 0; i < space.size(); ++i) {
        values.emplace_back(space.name(i), space.domain(i).sample(rng));
    }
    return Config(std::move(values), std::move(provenance));
}

}  // namespace mfo
