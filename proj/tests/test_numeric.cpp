#include <doctest.h>

#include <cmath>

#include "qcd/numeric.hpp"
#include "oracles.hpp"

using namespace qcd;

TEST_CASE("normal cdf and quantile invert each other") {
    for (double p : {1e-12, 1e-6, 0.01, 0.3, 0.5, 0.7, 0.99, 1.0 - 1e-6}) {
        const double z = normal_quantile(p);
        CHECK(normal_cdf(z) == doctest::Approx(p).epsilon(1e-10));
    }
    CHECK(normal_cdf(0.0) == doctest::Approx(0.5));
    CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("log_sum_exp basics") {
    CHECK(log_sum_exp(kNegInf, 1.5) == 1.5);
    CHECK(log_sum_exp(0.0, 0.0) == doctest::Approx(std::log(2.0)));
    CHECK(log_sum_exp(1000.0, 1000.0) == doctest::Approx(1000.0 + std::log(2.0)));
}

TEST_CASE("adaptive quadrature integrates a gaussian density to 1") {
    const double v = integrate(
        [](double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); }, -10.0, 10.0,
        1e-12);
    CHECK(std::fabs(v - 1.0) < 1e-10);
}

TEST_CASE("quadrature handles an off-center narrow bump") {
    // integral of exp(-((x-7)/0.01)^2 / 2) = 0.01*sqrt(2 pi)
    const double v = integrate(
        [](double x) {
            const double z = (x - 7.0) / 0.01;
            return std::exp(-0.5 * z * z);
        },
        -10.0, 10.0, 1e-12);
    CHECK(v == doctest::Approx(0.01 * std::sqrt(2.0 * M_PI)).epsilon(1e-8));
}

TEST_CASE("bisection finds a root") {
    const double r = bisect_root([](double x) { return x * x * x - 2.0; }, 0.0, 4.0, 1e-13);
    CHECK(r == doctest::Approx(std::cbrt(2.0)).epsilon(1e-12));
}
