#include <doctest.h>

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <random>

#include "coldloop/error.hpp"
#include "coldloop/stats.hpp"
#include "oracles.hpp"

using namespace coldloop;
using namespace coldloop::stats;

TEST_CASE("ranks with ties") {
    const std::vector<double> v{3, 1, 3, 2};
    CHECK(average_ranks(v) == std::vector<double>{3.5, 1, 3.5, 2});
    CHECK(tie_term(v) == 6.0);
}

TEST_CASE("Kruskal-Wallis examples") {
    std::vector<std::vector<double>> g{{1, 2, 3}, {4, 5, 6}, {7, 8, 9}};
    const auto r = kruskal_wallis(g);
    CHECK(r.statistic == doctest::Approx(7.2));
    CHECK(r.df == 2);
    CHECK(r.p_value == doctest::Approx(std::exp(-3.6)));
    CHECK(r.method == Method::kruskal_wallis);

    std::vector<std::vector<double>> two{{1, 2}, {3, 4}};
    CHECK(kruskal_wallis(two).statistic == doctest::Approx(2.4));
    CHECK(kruskal_wallis(two).df == 1);

    std::vector<std::vector<double>> flat{{5, 5}, {5, 5, 5}, {5}};
    CHECK(kruskal_wallis(flat).statistic == 0.0);
    CHECK(kruskal_wallis(flat).p_value == 1.0);

    std::vector<std::vector<double>> one{{1, 2}};
    CHECK_THROWS_AS(kruskal_wallis(one), ValidationError);
    std::vector<std::vector<double>> empty{{1, 2}, {}};
    CHECK_THROWS_AS(kruskal_wallis(empty), ValidationError);
}

TEST_CASE("Kruskal-Wallis matches the formula and ignores monotone transforms") {
    std::mt19937_64 rng(21);
    std::uniform_int_distribution<int> level(1, 7), size(1, 12), groups(2, 6);
    for (int t = 0; t < 500; ++t) {
        std::vector<std::vector<double>> g(groups(rng));
        for (auto& x : g) {
            x.resize(size(rng));
            for (auto& v : x) v = level(rng);
        }
        const auto r = kruskal_wallis(g);
        CHECK(r.statistic == doctest::Approx(oracle::kruskal_h(g)).epsilon(1e-10));
        CHECK(r.p_value >= 0.0);
        CHECK(r.p_value <= 1.0);

        auto warped = g;
        for (auto& x : warped)
            for (auto& v : x) v = std::exp(v) + 3.0 * v;
        CHECK(kruskal_wallis(warped).statistic == doctest::Approx(r.statistic).epsilon(1e-12));
    }
}

TEST_CASE("Wilcoxon examples") {
    std::vector<double> a{1, 2}, b{3, 4};
    const auto r = wilcoxon_rank_sum(a, b);
    CHECK(r.statistic == 0.0);
    CHECK(r.p_value == doctest::Approx(1.0 / 3.0));
    CHECK(r.method == Method::wilcoxon_exact);

    std::vector<double> c{1, 2, 3}, d{4, 5, 6};
    CHECK(wilcoxon_rank_sum(c, d).p_value == doctest::Approx(0.1));

    std::vector<double> same{1, 2, 3, 4};
    CHECK(wilcoxon_rank_sum(same, same).p_value == doctest::Approx(1.0));

    std::vector<double> ties_a{1, 1, 2}, ties_b{2, 3, 3};
    CHECK(wilcoxon_rank_sum(ties_a, ties_b).method == Method::wilcoxon_normal);

    std::vector<double> none;
    CHECK_THROWS_AS(wilcoxon_rank_sum(none, a), ValidationError);
}

TEST_CASE("exact Wilcoxon equals exhaustive enumeration up to n = 10") {
    std::mt19937_64 rng(8);
    int cases = 0;
    for (int n = 2; n <= 10; ++n)
        for (int na = 1; na < n; ++na)
            for (int rep = 0; rep < 20; ++rep) {
                std::vector<double> pool(n);
                std::iota(pool.begin(), pool.end(), 1.0);
                std::shuffle(pool.begin(), pool.end(), rng);
                std::vector<double> a(pool.begin(), pool.begin() + na), b(pool.begin() + na, pool.end());
                const auto r = wilcoxon_rank_sum(a, b);
                CHECK(r.method == Method::wilcoxon_exact);
                CHECK(r.p_value == doctest::Approx(oracle::wilcoxon_enumerated(a, b)).epsilon(1e-12));
                ++cases;
            }
    CHECK(cases > 0);
}

TEST_CASE("large samples use the normal approximation") {
    std::vector<double> a, b;
    for (int i = 0; i < 15; ++i) {
        a.push_back(i);
        b.push_back(i + 0.5);
    }
    const auto r = wilcoxon_rank_sum(a, b);
    CHECK(r.method == Method::wilcoxon_normal);
    CHECK(r.p_value > 0.5);
}

TEST_CASE("Benjamini-Hochberg examples") {
    std::vector<double> p{0.01, 0.02, 0.03, 0.04, 0.05};
    for (double q : benjamini_hochberg(p)) CHECK(q == doctest::Approx(0.05));
    std::vector<double> one{0.5};
    CHECK(benjamini_hochberg(one)[0] == 0.5);
    std::vector<double> pair{0.04, 0.9};
    const auto adj = benjamini_hochberg(pair);
    CHECK(adj[0] == doctest::Approx(0.08));
    CHECK(adj[1] == doctest::Approx(0.9));
    std::vector<double> bad{0.2, 1.5};
    CHECK_THROWS_AS(benjamini_hochberg(bad), ValidationError);
}

TEST_CASE("Benjamini-Hochberg equals the stepwise definition") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> size(1, 30);
    for (int t = 0; t < 10000; ++t) {
        std::vector<double> p(size(rng));
        for (auto& v : p) v = u(rng) * u(rng);
        const auto got = benjamini_hochberg(p);
        const auto want = oracle::bh_stepwise(p);
        for (std::size_t i = 0; i < p.size(); ++i) {
            REQUIRE(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
            REQUIRE(got[i] >= p[i] * (1 - 1e-15));
            REQUIRE(got[i] <= 1.0);
        }
    }
}

TEST_CASE("chi-square survival") {
    CHECK(chi_square_sf(0.0, 1) == 1.0);
    CHECK(chi_square_sf(0.0, 7) == 1.0);
    CHECK(std::abs(chi_square_sf(7.2, 2) - std::exp(-3.6)) <= 1e-12);
    CHECK(chi_square_sf(3.84, 1) == doctest::Approx(0.0500).epsilon(1e-2));
    CHECK_THROWS_AS(chi_square_sf(-1.0, 2), ValidationError);
    CHECK_THROWS_AS(chi_square_sf(1.0, 0), ValidationError);

    for (double x = 0.0; x <= 60.0; x += 0.37)
        CHECK(std::abs(chi_square_sf(x, 2) - std::exp(-x / 2)) <= 1e-12);

    double worst = 0.0;
    int not_decreasing = 0;
    for (int df = 1; df <= 50; ++df) {
        double previous = 2.0;
        for (double x = 0.0; x <= 200.0; x += 0.25) {
            const double got = chi_square_sf(x, df);
            const double want = boost::math::gamma_q(df / 2.0, x / 2.0);
            worst = std::max(worst, std::abs(got - want));
            if (got > 0.0 && got < 1.0 && !(got < previous)) ++not_decreasing;
            previous = got;
        }
    }
    CHECK(worst <= 1e-10);
    CHECK(not_decreasing == 0);
}
