#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <vector>

#include "mfo/sampler.hpp"
#include "mfo/stats.hpp"

using namespace mfo;

namespace {

SearchSpace unit_1d() {
    SearchSpace s;
    s.add("x", ParamDomain::uniform(0.0, 1.0));
    return s;
}

// History of random evaluations of a 1-d objective.
std::vector<Observation> quadratic_history(int n, std::uint64_t seed) {
    const SearchSpace space = unit_1d();
    RandomStream rng(seed);
    std::vector<Observation> history;
    for (int i = 0; i < n; ++i) {
        Config c = random_suggest(space, rng);
        const double x = c.get("x");
        history.push_back({std::move(c), -(x - 0.3) * (x - 0.3)});
    }
    return history;
}

}  // namespace

TEST_CASE("random suggestions: seeded, distinct across seeds, in bounds") {
    const SearchSpace space = default_space();
    RandomStream a(1);
    RandomStream b(1);
    RandomStream c(2);
    int collisions = 0;
    for (int i = 0; i < 100; ++i) {
        const Config ca = random_suggest(space, a);
        REQUIRE(ca == random_suggest(space, b));
        if (ca == random_suggest(space, c)) ++collisions;
        for (std::size_t d = 0; d < space.size(); ++d) {
            REQUIRE(space.domain(d).contains(ca.get(space.name(d))));
        }
    }
    REQUIRE(collisions == 0);
}

TEST_CASE("tpe_split cardinalities follow ceil(gamma N)") {
    auto history = quadratic_history(10, 3);
    auto [good, bad] = tpe_split(history, 0.25);
    REQUIRE(good.size() == 3);  // ceil(2.5)
    REQUIRE(bad.size() == 7);

    auto single = quadratic_history(1, 3);
    auto [g1, b1] = tpe_split(single, 0.25);
    REQUIRE(g1 == std::vector<std::size_t>{0});
    REQUIRE(b1.empty());
}

TEST_CASE("tpe_split is ordered by objective with earliest-first ties") {
    std::vector<Observation> history;
    const SearchSpace space = unit_1d();
    RandomStream rng(9);
    for (int i = 0; i < 8; ++i) {
        history.push_back({random_suggest(space, rng), 0.5});  // all equal
    }
    auto [good, bad] = tpe_split(history, 0.25);
    REQUIRE(good == std::vector<std::size_t>{0, 1});  // ceil(2.0), earliest first

    history[5].objective = 1.0;
    auto [good2, bad2] = tpe_split(history, 0.25);
    REQUIRE(good2 == std::vector<std::size_t>{5, 0});
}

TEST_CASE("below n_startup the suggestion is a random fallback") {
    const SearchSpace space = unit_1d();
    TpeParams params;
    RandomStream rng(4);
    const auto s = tpe_suggest_ex(space, {}, params, rng);
    REQUIRE(s.startup_fallback);
    REQUIRE(space.domain(0).contains(s.config.get("x")));
}

TEST_CASE("tpe concentrates suggestions near a 1-d quadratic optimum") {
    const SearchSpace space = unit_1d();
    const auto history = quadratic_history(50, 12);
    TpeParams params;
    RandomStream rng(99);
    double sum = 0.0;
    for (int i = 0; i < 20; ++i) {
        const Config c = tpe_suggest(space, history, params, rng);
        const double x = c.get("x");
        REQUIRE(x >= 0.0);
        REQUIRE(x <= 1.0);
        sum += x;
    }
    REQUIRE(std::abs(sum / 20.0 - 0.3) < 0.1);
}

TEST_CASE("degenerate good set stays within the bandwidth floor") {
    const SearchSpace space = unit_1d();
    std::vector<Observation> history;
    for (int i = 0; i < 5; ++i) {
        history.push_back({Config({{"x", 0.5}}, "fixed"), 1.0});
    }
    RandomStream spread_rng(31);
    for (int i = 0; i < 15; ++i) {
        history.push_back({random_suggest(space, spread_rng), 0.0});
    }
    TpeParams params;
    params.n_startup = 1;
    RandomStream rng(8);
    int inside = 0;
    const int trials = 200;
    for (int i = 0; i < trials; ++i) {
        const auto s = tpe_suggest_ex(space, history, params, rng);
        REQUIRE(std::isfinite(s.acquisition));
        if (std::abs(s.config.get("x") - 0.5) <= 3.0 * 1e-3) ++inside;
    }
    REQUIRE(inside >= static_cast<int>(trials * 0.99));
}

TEST_CASE("gamma near one leaves the bad set empty without crashing") {
    const SearchSpace space = unit_1d();
    const auto history = quadratic_history(10, 5);
    TpeParams params;
    params.gamma = 0.99;  // good = ceil(9.9) = all ten
    params.n_startup = 1;
    RandomStream rng(6);
    for (int i = 0; i < 10; ++i) {
        const auto s = tpe_suggest_ex(space, history, params, rng);
        REQUIRE(std::isfinite(s.acquisition));
        REQUIRE(space.domain(0).contains(s.config.get("x")));
    }
}

TEST_CASE("suggestions respect bounds in the full mixed space") {
    const SearchSpace space = default_space();
    RandomStream seed_rng(14);
    std::vector<Observation> history;
    for (int i = 0; i < 30; ++i) {
        Config c = random_suggest(space, seed_rng);
        const double obj = -std::pow(std::log10(c.get("l")) + 1.0, 2.0);
        history.push_back({std::move(c), obj});
    }
    for (bool multivariate : {true, false}) {
        TpeParams params;
        params.multivariate = multivariate;
        RandomStream rng(15);
        for (int i = 0; i < 25; ++i) {
            const Config c = tpe_suggest(space, history, params, rng);
            for (std::size_t d = 0; d < space.size(); ++d) {
                REQUIRE(space.domain(d).contains(c.get(space.name(d))));
            }
            // Integer dimension actually lands on integers.
            REQUIRE(c.get("b") == std::floor(c.get("b")));
        }
    }
}

TEST_CASE("tpe suggestion is deterministic given history, params and seed") {
    const SearchSpace space = default_space();
    RandomStream seed_rng(20);
    std::vector<Observation> history;
    for (int i = 0; i < 25; ++i) {
        Config c = random_suggest(space, seed_rng);
        history.push_back({c, c.get("l")});
    }
    TpeParams params;
    RandomStream a(77);
    RandomStream b(77);
    for (int i = 0; i < 10; ++i) {
        REQUIRE(tpe_suggest(space, history, params, a) == tpe_suggest(space, history, params, b));
    }
}

TEST_CASE("confidence interval matches the hand-computed five-sample fixture") {
    const std::vector<double> xs{1.0, 2.0, 3.0, 4.0, 5.0};
    REQUIRE(mean(xs) == Catch::Approx(3.0));
    REQUIRE(sample_std(xs) == Catch::Approx(1.5811388300841898).margin(1e-12));
    // t(0.975, df=4) = 2.7764451; halfwidth = t * s / sqrt(5).
    REQUIRE(ci95_halfwidth(xs) == Catch::Approx(1.9632431614775607).margin(1e-9));
}

TEST_CASE("one-sided sign test tail probabilities") {
    REQUIRE(sign_test_p_one_sided(32, 18) == Catch::Approx(0.03245432353613609).margin(1e-12));
    REQUIRE(sign_test_p_one_sided(31, 19) == Catch::Approx(0.05946022627971814).margin(1e-12));
    REQUIRE(sign_test_p_one_sided(16, 4) == Catch::Approx(0.005908966064453125).margin(1e-12));
    REQUIRE(sign_test_p_one_sided(0, 0) == 1.0);
    REQUIRE(sign_test_p_one_sided(0, 5) == 1.0);
}
