#pragma once

#include <cmath>
#include <span>
#include <stdexcept>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/students_t.hpp>

namespace mfo {

inline double mean(std::span<const double> xs) {
    if (xs.empty()) throw std::invalid_argument("mean: empty sample");
    double sum = 0.0;
    for (double x : xs) sum += x;
    return sum / static_cast<double>(xs.size());
}

inline double sample_std(std::span<const double> xs) {
    if (xs.size() < 2) throw std::invalid_argument("sample_std: need at least two samples");
    const double m = mean(xs);
    double acc = 0.0;
    for (double x : xs) acc += (x - m) * (x - m);
    return std::sqrt(acc / static_cast<double>(xs.size() - 1));
}

// 95% confidence half-width with the t-distribution on k - 1 degrees of
// freedom: t_{0.975, k-1} * s / sqrt(k).
inline double ci95_halfwidth(std::span<const double> xs) {
    const auto k = static_cast<double>(xs.size());
    if (xs.size() < 2) throw std::invalid_argument("ci95_halfwidth: need at least two samples");
    const boost::math::students_t dist(k - 1.0);
    const double t = boost::math::quantile(dist, 0.975);
    return t * sample_std(xs) / std::sqrt(k);
}

// One-sided sign test: probability of at least `wins` successes out of
// wins + losses fair coin flips. Ties are dropped by the caller.
inline double sign_test_p_one_sided(int wins, int losses) {
    if (wins < 0 || losses < 0) throw std::invalid_argument("sign test: negative counts");
    const int n = wins + losses;
    if (n == 0) return 1.0;
    if (wins == 0) return 1.0;
    const boost::math::binomial dist(n, 0.5);
    return boost::math::cdf(boost::math::complement(dist, wins - 1));
}

}  // namespace mfo
