#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "mfo/rng.hpp"
#include "mfo/search_space.hpp"

namespace mfo {

// One finished trial as seen by the sampler: the configuration and its
// objective (deepest observed metric, higher is better).
struct Observation {
    Config config;
    double objective = 0.0;
};

struct TpeParams {
    double gamma = 0.25;
    int n_startup = 10;
    int n_candidates = 24;
    bool multivariate = true;
    std::string bandwidth_rule = "scott";

    void validate() const {
        if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("tpe: gamma in (0, 1)");
        if (n_startup < 1) throw std::invalid_argument("tpe: n_startup >= 1");
        if (n_candidates < 1) throw std::invalid_argument("tpe: n_candidates >= 1");
        if (bandwidth_rule != "scott") {
            throw std::invalid_argument("tpe: unknown bandwidth rule '" + bandwidth_rule + "'");
        }
    }
};

inline Config random_suggest(const SearchSpace& space, RandomStream& rng,
                             std::string provenance = "random") {
    return sample(space, rng, std::move(provenance));
}

// Splits history into (good, bad) index sets: good is the top ceil(gamma*N)
// by objective, ties resolved in favor of earlier observations.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> tpe_split(
    const std::vector<Observation>& history, double gamma) {
    if (history.empty()) throw std::invalid_argument("tpe_split: empty history");
    for (const auto& obs : history) {
        if (!std::isfinite(obs.objective)) {
            throw std::invalid_argument("tpe_split: non-finite objective");
        }
    }
    const auto n_good = static_cast<std::size_t>(
        std::ceil(gamma * static_cast<double>(history.size())));
    std::vector<std::size_t> order(history.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (history[a].objective != history[b].objective) {
            return history[a].objective > history[b].objective;
        }
        return a < b;
    });
    std::vector<std::size_t> good(order.begin(), order.begin() + static_cast<long>(n_good));
    std::vector<std::size_t> bad(order.begin() + static_cast<long>(n_good), order.end());
    return {std::move(good), std::move(bad)};
}

namespace tpe_detail {

inline double norm_cdf(double z) { return 0.5 * std::erfc(-z * 0.70710678118654752440); }

// Log density of a Gaussian kernel truncated to [0, 1].
inline double log_trunc_normal_pdf(double x, double mu, double sigma) {
    const double z = (x - mu) / sigma;
    const double mass = norm_cdf((1.0 - mu) / sigma) - norm_cdf((0.0 - mu) / sigma);
    const double log_sqrt_2pi = 0.91893853320467274178;
    return -0.5 * z * z - log_sqrt_2pi - std::log(sigma) - std::log(mass);
}

inline double logsumexp(const std::vector<double>& v) {
    const double mx = *std::max_element(v.begin(), v.end());
    double sum = 0.0;
    for (double x : v) sum += std::exp(x - mx);
    return mx + std::log(sum);
}

// Scott's rule with a hard floor so degenerate (all-identical) sets still
// yield a usable kernel.
inline double scott_bandwidth(std::size_t n, std::size_t dims, double stddev) {
    const double factor = std::pow(static_cast<double>(n),
                                   -1.0 / (static_cast<double>(dims) + 4.0));
    return std::max(factor * stddev, 1e-3);
}

inline double population_std(const std::vector<double>& v) {
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double acc = 0.0;
    for (double x : v) acc += (x - mean) * (x - mean);
    return std::sqrt(acc / static_cast<double>(v.size()));
}

// Wide prior kernel mixed into every density, one per TPE convention:
// keeps global exploration alive and stops the sampler from locking onto an
// early cluster once its bandwidth shrinks to the floor.
constexpr double kPriorMu = 0.5;
constexpr double kPriorSigma = 1.0;

// Parzen mixture over the unit cube: one truncated-Gaussian kernel per
// observation with per-dimension bandwidths, plus the domain-wide prior
// kernel. In multivariate mode each observation contributes one
// axis-aligned d-dimensional kernel; in univariate mode each dimension is
// an independent mixture.
struct ParzenDensity {
    std::vector<std::vector<double>> points;  // [obs][dim]
    std::vector<double> bandwidths;           // per dim
    bool multivariate = true;

    static ParzenDensity fit(const std::vector<std::vector<double>>& points, bool multivariate) {
        ParzenDensity d;
        d.points = points;
        d.multivariate = multivariate;
        const std::size_t dims = points.front().size();
        d.bandwidths.resize(dims);
        // Scott's rule over the mixture's component centers, prior included:
        // a set collapsed away from the domain center keeps a usable spread,
        // while a set collapsed onto it falls back to the hard floor.
        std::vector<double> column(points.size() + 1);
        for (std::size_t j = 0; j < dims; ++j) {
            for (std::size_t i = 0; i < points.size(); ++i) column[i] = points[i][j];
            column[points.size()] = kPriorMu;
            d.bandwidths[j] = scott_bandwidth(column.size(), dims, population_std(column));
        }
        return d;
    }

    std::size_t components() const { return points.size() + 1; }  // + prior

    double kernel_mu(std::size_t comp, std::size_t dim) const {
        return comp < points.size() ? points[comp][dim] : kPriorMu;
    }

    double kernel_sigma(std::size_t comp, std::size_t dim) const {
        return comp < points.size() ? bandwidths[dim] : kPriorSigma;
    }

    double log_pdf(const std::vector<double>& x) const {
        const std::size_t dims = bandwidths.size();
        const double log_weight = std::log(static_cast<double>(components()));
        if (multivariate) {
            std::vector<double> terms(components());
            for (std::size_t i = 0; i < components(); ++i) {
                double lp = 0.0;
                for (std::size_t j = 0; j < dims; ++j) {
                    lp += log_trunc_normal_pdf(x[j], kernel_mu(i, j), kernel_sigma(i, j));
                }
                terms[i] = lp;
            }
            return logsumexp(terms) - log_weight;
        }
        double total = 0.0;
        std::vector<double> terms(components());
        for (std::size_t j = 0; j < dims; ++j) {
            for (std::size_t i = 0; i < components(); ++i) {
                terms[i] = log_trunc_normal_pdf(x[j], kernel_mu(i, j), kernel_sigma(i, j));
            }
            total += logsumexp(terms) - log_weight;
        }
        return total;
    }

    double sample_dim(std::size_t comp, std::size_t dim, RandomStream& rng) const {
        const double mu = kernel_mu(comp, dim);
        const double sigma = kernel_sigma(comp, dim);
        for (int attempt = 0; attempt < 100; ++attempt) {
            const double x = mu + sigma * rng.gaussian();
            if (x >= 0.0 && x <= 1.0) return x;
        }
        return std::clamp(mu, 0.0, 1.0);
    }

    std::vector<double> sample(RandomStream& rng) const {
        const std::size_t dims = bandwidths.size();
        std::vector<double> x(dims);
        if (multivariate) {
            const auto comp = static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<std::int64_t>(components()) - 1));
            for (std::size_t j = 0; j < dims; ++j) x[j] = sample_dim(comp, j, rng);
        } else {
            for (std::size_t j = 0; j < dims; ++j) {
                const auto comp = static_cast<std::size_t>(
                    rng.uniform_int(0, static_cast<std::int64_t>(components()) - 1));
                x[j] = sample_dim(comp, j, rng);
            }
        }
        return x;
    }
};

inline std::vector<double> to_unit_vector(const SearchSpace& space, const Config& config) {
    std::vector<double> u(space.size());
    for (std::size_t j = 0; j < space.size(); ++j) {
        u[j] = space.domain(j).to_unit(config.get(space.name(j)));
    }
    return u;
}

}  // namespace tpe_detail

struct TpeSuggestion {
    Config config;
    double acquisition = 0.0;  // log l(x) - log g(x) of the chosen candidate
    bool startup_fallback = false;
};

// Tree-structured Parzen estimator suggestion. Below n_startup observations
// it falls back to a random draw; otherwise it fits good/bad kernel
// densities in the unit cube, samples candidates from the good density, and
// returns the candidate with the best density ratio.
inline TpeSuggestion tpe_suggest_ex(const SearchSpace& space,
                                    const std::vector<Observation>& history,
                                    const TpeParams& params, RandomStream& rng,
                                    std::string provenance = "tpe") {
    params.validate();
    if (history.size() < static_cast<std::size_t>(params.n_startup)) {
        TpeSuggestion out;
        out.config = random_suggest(space, rng, provenance + ":startup");
        out.startup_fallback = true;
        return out;
    }

    const auto [good_idx, bad_idx] = tpe_split(history, params.gamma);
    std::vector<std::vector<double>> good_points;
    good_points.reserve(good_idx.size());
    for (std::size_t i : good_idx) {
        good_points.push_back(tpe_detail::to_unit_vector(space, history[i].config));
    }
    const auto good = tpe_detail::ParzenDensity::fit(good_points, params.multivariate);

    std::vector<std::vector<double>> bad_points;
    bad_points.reserve(bad_idx.size());
    for (std::size_t i : bad_idx) {
        bad_points.push_back(tpe_detail::to_unit_vector(space, history[i].config));
    }
    const bool have_bad = !bad_points.empty();
    tpe_detail::ParzenDensity bad;
    if (have_bad) bad = tpe_detail::ParzenDensity::fit(bad_points, params.multivariate);

    std::vector<double> best_x;
    double best_score = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < params.n_candidates; ++c) {
        const std::vector<double> x = good.sample(rng);
        const double score = good.log_pdf(x) - (have_bad ? bad.log_pdf(x) : 0.0);
        if (score > best_score) {
            best_score = score;
            best_x = x;
        }
    }

    std::vector<std::pair<std::string, double>> values;
    values.reserve(space.size());
    for (std::size_t j = 0; j < space.size(); ++j) {
        values.emplace_back(space.name(j), space.domain(j).from_unit(best_x[j]));
    }
    TpeSuggestion out;
    out.config = Config(std::move(values), std::move(provenance));
    out.acquisition = best_score;
    return out;
}

inline Config tpe_suggest(const SearchSpace& space, const std::vector<Observation>& history,
                          const TpeParams& params, RandomStream& rng,
                          std::string provenance = "tpe") {
    return tpe_suggest_ex(space, history, params, rng, std::move(provenance)).config;
}

}  // namespace mfo
