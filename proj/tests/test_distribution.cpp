#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "qcd/distribution.hpp"
#include "qcd/uncertainty.hpp"

using namespace qcd;

namespace {

// Families exercised by every whole-law property test below.
std::vector<Distribution> law_zoo() {
    const Distribution g0 = Distribution::gaussian(0, 1);
    const Distribution g1 = Distribution::gaussian(1, 1);
    const HuberThresholds t = huber_thresholds(g0, g1, 0.05);
    return {
        g0,
        Distribution::gaussian(-2, 0.5),
        Distribution::exponential(2),
        Distribution::mixture({0.95, 0.05}, {g1, Distribution::gaussian(1, 5)}),
        Distribution::huber_censored0(g0, g1, 0.05, t.b),
        Distribution::huber_censored1(g0, g1, 0.05, t.a),
    };
}

double ks_statistic(std::vector<double> xs, const Distribution& d) {
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double worst = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = d.cdf(xs[i]);
        worst = std::max(worst, std::fabs(f - static_cast<double>(i) / n));
        worst = std::max(worst, std::fabs(static_cast<double>(i + 1) / n - f));
    }
    return worst;
}

} // namespace

TEST_CASE("log_density closed-form spot values") {
    CHECK(Distribution::gaussian(0, 1).log_density(0.0) ==
          doctest::Approx(-0.9189385332046727).epsilon(1e-12));
    CHECK(Distribution::exponential(2).log_density(-1.0) == kNegInf);
    // mixture of two coincident components equals the component density
    const Distribution m = Distribution::mixture(
        {0.95, 0.05}, {Distribution::gaussian(0, 1), Distribution::gaussian(0, 1)});
    CHECK(m.log_density(0.0) ==
          doctest::Approx(Distribution::gaussian(0, 1).log_density(0.0)).epsilon(1e-12));
}

TEST_CASE("cdf spot values and mixture linearity") {
    CHECK(Distribution::gaussian(0, 1).cdf(0.0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(Distribution::exponential(1).cdf(std::log(2.0)) == doctest::Approx(0.5).epsilon(1e-12));
    const Distribution a = Distribution::gaussian(0, 1);
    const Distribution b = Distribution::exponential(1);
    const Distribution m = Distribution::mixture({0.3, 0.7}, {a, b});
    for (double x : {-1.0, 0.0, 0.4, 2.0})
        CHECK(m.cdf(x) == doctest::Approx(0.3 * a.cdf(x) + 0.7 * b.cdf(x)).epsilon(1e-12));
}

TEST_CASE("sampling is deterministic in the seed") {
    const Distribution d = Distribution::gaussian(2, 3);
    const Seed s{123, 77};
    CHECK(d.sample(s, 32) == d.sample(s, 32));
    CHECK(d.sample(Seed{123, 78}, 4) != d.sample(s, 4));
}

TEST_CASE("sample means match the laws (CLT bound, 1e6 draws)") {
    {
        const auto xs = Distribution::gaussian(0, 1).sample(Seed{2024, 1}, 1000000);
        double mean = 0;
        for (double x : xs) mean += x;
        mean /= static_cast<double>(xs.size());
        CHECK(std::fabs(mean) < 0.005); // ~5 standard errors
    }
    {
        const auto xs = Distribution::exponential(2).sample(Seed{2024, 2}, 1000000);
        double mean = 0;
        for (double x : xs) mean += x;
        mean /= static_cast<double>(xs.size());
        CHECK(std::fabs(mean - 0.5) < 0.0025);
    }
}

TEST_CASE("density integrates to 1 for every law") {
    for (const auto& d : law_zoo()) {
        const Interval r = d.quantile_range(1e-12);
        const double mass = integrate([&](double x) { return std::exp(d.log_density(x)); },
                                      r.lo, r.hi, 1e-10);
        CHECK(std::fabs(mass - 1.0) < 1e-8);
    }
}

TEST_CASE("cdf is monotone on random grids") {
    Rng rng(Seed{5, 5});
    for (const auto& d : law_zoo()) {
        std::vector<double> xs(200);
        for (auto& x : xs) x = -20.0 + 45.0 * rng.uniform01();
        std::sort(xs.begin(), xs.end());
        for (std::size_t i = 1; i < xs.size(); ++i) CHECK(d.cdf(xs[i - 1]) <= d.cdf(xs[i]));
    }
}

TEST_CASE("empirical cdf of 1e5 samples matches cdf (KS < 0.01)") {
    int stream = 0;
    for (const auto& d : law_zoo()) {
        const auto xs = d.sample(Seed{909, static_cast<std::uint64_t>(stream++)}, 100000);
        CHECK(ks_statistic(xs, d) < 0.01);
    }
}

TEST_CASE("quantile inverts cdf everywhere it matters") {
    for (const auto& d : law_zoo()) {
        for (double u : {1e-6, 0.01, 0.25, 0.5, 0.9, 0.999}) {
            CHECK(d.cdf(d.quantile(u)) == doctest::Approx(u).epsilon(1e-7));
        }
    }
}

TEST_CASE("kl divergence closed forms") {
    CHECK(kl_divergence(Distribution::gaussian(1, 1), Distribution::gaussian(0, 1)) ==
          doctest::Approx(0.5).epsilon(1e-12));
    CHECK(kl_divergence(Distribution::exponential(2), Distribution::exponential(1)) ==
          doctest::Approx(std::log(2.0) - 0.5).epsilon(1e-12));
}

TEST_CASE("kl divergence quadrature path agrees with the trapezoid oracle") {
    // force the generic path by comparing different families
    const Distribution p = Distribution::exponential(2);
    const Distribution q = Distribution::exponential(1);
    const Distribution q_as_mixture = Distribution::mixture({1.0}, {q});
    const double via_quadrature = kl_divergence(p, q_as_mixture);
    const double via_oracle = oracle::trapezoid(
        [&](double x) {
            const double lp = p.log_density(x);
            if (lp == kNegInf) return 0.0;
            return std::exp(lp) * (lp - q.log_density(x));
        },
        0.0, 40.0, 400001);
    CHECK(via_quadrature == doctest::Approx(std::log(2.0) - 0.5).epsilon(1e-7));
    CHECK(via_quadrature == doctest::Approx(via_oracle).epsilon(1e-6));
}

TEST_CASE("kl divergence is nonnegative, zero only at equality") {
    std::vector<Distribution> grid;
    for (double m : {0.0, 0.5, 1.0})
        for (double sd : {0.5, 1.0, 2.0}) grid.push_back(Distribution::gaussian(m, sd));
    for (double r : {0.5, 1.0, 3.0}) grid.push_back(Distribution::exponential(r));
    for (const auto& p : grid)
        for (const auto& q : grid) {
            if (p.kind() != q.kind()) continue;
            const double d = kl_divergence(p, q);
            if (p == q) CHECK(std::fabs(d) < 1e-12);
            else CHECK(d > 1e-6);
        }
}

TEST_CASE("kl divergence signals support mismatch") {
    CHECK(kl_divergence(Distribution::gaussian(0, 1), Distribution::exponential(1)) == kPosInf);
}

TEST_CASE("invalid parameters are rejected") {
    CHECK_THROWS_AS(Distribution::gaussian(0, -1), std::invalid_argument);
    CHECK_THROWS_AS(Distribution::exponential(0), std::invalid_argument);
    CHECK_THROWS_AS(Distribution::mixture({0.5, 0.6}, {Distribution::gaussian(0, 1),
                                                       Distribution::gaussian(1, 1)}),
                    std::invalid_argument);
    // censoring threshold inconsistent with eps: mass != 1
    CHECK_THROWS_AS(Distribution::huber_censored0(Distribution::gaussian(0, 1),
                                                  Distribution::gaussian(1, 1), 0.05, 100.0),
                    std::invalid_argument);
}
