#include <doctest.h>

#include <cmath>

#include "qcd/simulator.hpp"

using namespace qcd;

namespace {

const Distribution g0 = Distribution::gaussian(0, 1);

DetectorModel cusum_model(const Llr& llr, double eta) {
    DetectorModel m;
    m.spec.family = DetectorFamily::cusum;
    m.spec.eta = eta;
    m.llr = llr;
    return m;
}

} // namespace

TEST_CASE("wdd of a deterministic ramp detector") {
    // llr == 1 regardless of the data: alarm exactly at eta steps
    const DetectorModel m = cusum_model(AffineLlr{0.0, 1.0}, 5.0);
    const DelayEstimate d = estimate_wdd(m, g0, g0, 300, 10000, Seed{11, 0}, 2);
    CHECK(d.estimate.value == 5.0);
    CHECK(d.estimate.std_error == 0.0);
    CHECK(d.estimate.censored_fraction == 0.0);
}

TEST_CASE("wdd rejects detectors without a renewal worst state") {
    DetectorModel m;
    m.spec.family = DetectorFamily::shiryaev;
    m.llr = AffineLlr{1.0, -0.5};
    CHECK_THROWS_AS(estimate_wdd(m, g0, g0, 10, 100, Seed{11, 1}, 1), std::invalid_argument);
}

TEST_CASE("glr wdd sweeps the lambda grid and reports the max") {
    DetectorModel m;
    m.spec.family = DetectorFamily::glr;
    m.spec.eta = 3.0;
    m.spec.window = 500;
    m.spec.theta_lo = 0.1;
    m.spec.theta_hi = 3.0;
    const Distribution nu1 = Distribution::gaussian(1.0, 1.0);
    const DelayEstimate d =
        estimate_wdd(m, g0, nu1, 400, 5000, Seed{11, 2}, 2, {1, 10, 50});
    REQUIRE(d.lambda_grid.size() == 3);
    REQUIRE(d.per_lambda.size() == 3);
    for (const auto& e : d.per_lambda) CHECK(d.estimate.value >= e.value);
    for (std::int64_t kept : d.retained_per_lambda) CHECK(kept > 0);
}

TEST_CASE("add is zero when the alarm cannot wait past the change") {
    // alarm at n=1 always; tau=1 <= Lambda so no delay accrues
    const DetectorModel m = cusum_model(AffineLlr{0.0, 1.0}, 0.5);
    const DelayEstimate d =
        estimate_add(m, g0, Distribution::gaussian(1, 1), 0.1, 500, 10000, Seed{12, 0}, 2);
    CHECK(d.estimate.value == 0.0);
}

TEST_CASE("add shrinks as the post-change mean grows") {
    DetectorModel m;
    m.spec.family = DetectorFamily::shiryaev;
    m.spec.rho = 0.1;
    m.spec.eta = 4.0;
    m.llr = AffineLlr{0.1, -0.005};
    const DelayEstimate weak =
        estimate_add(m, g0, Distribution::gaussian(0.1, 1), 0.1, 2000, 100000, Seed{12, 1}, 2);
    const DelayEstimate strong =
        estimate_add(m, g0, Distribution::gaussian(2.0, 1), 0.1, 2000, 100000, Seed{12, 1}, 2);
    CHECK(weak.estimate.value > strong.estimate.value);
}

TEST_CASE("jsrp conditions on surviving the burn-in") {
    // deterministic detector: tau = 5 regardless of data
    const DetectorModel m = cusum_model(AffineLlr{0.0, 1.0}, 5.0);
    const DelayEstimate d =
        estimate_jsrp(m, g0, g0, {1, 2, 5}, 400, 10000, Seed{13, 0}, 2);
    REQUIRE(d.per_lambda.size() == 3);
    CHECK(d.per_lambda[0].value == 4.0); // E[tau - 1]
    CHECK(d.per_lambda[1].value == 3.0);
    CHECK(d.per_lambda[2].value == 0.0);
    CHECK(d.estimate.value == 4.0); // sup over the grid
    for (const auto& e : d.per_lambda) CHECK(d.estimate.value >= e.value);
}

TEST_CASE("jsrp flags grid points with thin conditioning") {
    // alarms immediately: no run survives a burn-in of length > 1
    const DetectorModel m = cusum_model(AffineLlr{0.0, 1.0}, 0.5);
    const DelayEstimate d = estimate_jsrp(m, g0, g0, {50}, 300, 1000, Seed{13, 1}, 2);
    CHECK(d.low_retention_warning);
}

TEST_CASE("asymptotic bound for the gaussian band lfd") {
    const LfdPair lfd = solve_lfd(UncertaintyClass::singleton(g0),
                                  UncertaintyClass::gaussian_mean_band(0.1, 3.0, 1.0));
    const AsymptoticBound b =
        asymptotic_bound(g0, Distribution::gaussian(1, 1), lfd, 0.001);
    CHECK(b.info == doctest::Approx(0.095).epsilon(1e-9));
    CHECK(b.factor == doctest::Approx(0.5 / 0.095).epsilon(1e-9));
    CHECK(b.delay_bound == doctest::Approx(std::log(1000.0) / 0.095).epsilon(1e-9));

    // at nu1 = nu1_under with a singleton pre-change class the factor is 1
    const AsymptoticBound at_lfd =
        asymptotic_bound(g0, Distribution::gaussian(0.1, 1), lfd, 0.001);
    CHECK(at_lfd.factor == doctest::Approx(1.0).epsilon(1e-9));

    CHECK_THROWS_AS(asymptotic_bound(g0, g0, lfd, 0.001), NonInformative);
}

TEST_CASE("robust cusum delay is nonincreasing in the true mean") {
    const LfdPair lfd = solve_lfd(UncertaintyClass::singleton(g0),
                                  UncertaintyClass::gaussian_mean_band(0.1, 3.0, 1.0));
    DetectorModel robust = cusum_model(lfd.llr, 0.0);
    CalibrationOptions opt;
    opt.mode = CalibrationMode::far;
    opt.alpha = 0.01;
    opt.initial_runs = 500;
    opt.iter_run_cap = 5000;
    opt.total_run_cap = 50000;
    opt.seed = Seed{14, 0};
    opt.threads = 2;
    robust.spec.eta = calibrate_threshold(robust, g0, opt).eta;

    double prev = kPosInf;
    double prev_se = 0;
    for (double theta : {0.1, 0.4, 1.0, 2.0}) {
        const DelayEstimate d = estimate_wdd(robust, g0, Distribution::gaussian(theta, 1), 3000,
                                             100000, Seed{14, 1}, 2);
        CHECK(d.estimate.value <
              prev + 3.0 * std::sqrt(prev_se * prev_se +
                                     d.estimate.std_error * d.estimate.std_error) + 1e-9);
        prev = d.estimate.value;
        prev_se = d.estimate.std_error;
    }
}
