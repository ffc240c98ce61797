#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "qcd/detectors.hpp"

using namespace qcd;

namespace {

std::vector<double> random_stream(std::size_t n, std::uint64_t seed, double shift = 0.0) {
    Rng rng(Seed{seed, 0});
    std::vector<double> xs(n);
    for (auto& x : xs) x = shift + normal_quantile(rng.uniform_open());
    return xs;
}

} // namespace

TEST_CASE("cusum recursion steps") {
    CusumState s{2.0, 5.0, 4};
    auto [s1, a1] = cusum_step(s, -3.0);
    CHECK(s1.s == doctest::Approx(-1.0));
    CHECK_FALSE(a1);
    CHECK(s1.n == 5);

    auto [s2, a2] = cusum_step(CusumState{-1.0, 5.0, 0}, 0.5);
    CHECK(s2.s == doctest::Approx(0.5)); // negative part clipped before adding

    auto [s3, a3] = cusum_step(CusumState{4.9, 5.0, 0}, 0.2);
    CHECK(s3.s == doctest::Approx(5.1));
    CHECK(a3);
}

TEST_CASE("cusum recursion equals the path-max definition exactly") {
    for (std::uint64_t trial = 0; trial < 1000; ++trial) {
        const auto xs = random_stream(15, 1000 + trial);
        CusumState s{0.0, kPosInf, 0};
        for (std::size_t n = 1; n <= xs.size(); ++n) {
            s.step(xs[n - 1]);
            CHECK(s.s == oracle::cusum_path_max(xs, n)); // bitwise equal
        }
    }
}

TEST_CASE("shiryaev statistic at n=1 and against the double-sum oracle") {
    {
        // posterior odds after one observation: rho e^llr / (1-rho)
        ShiryaevState s;
        s.rho = 0.1;
        s.eta = kPosInf;
        s.step(0.7);
        CHECK(s.statistic() ==
              doctest::Approx(std::log(0.1 / 0.9) + 0.7).epsilon(1e-14));
        CHECK(s.log_sum_statistic() == doctest::Approx(std::log(0.1) + 0.7).epsilon(1e-12));
    }
    // the recursion reproduces the defining double sum (unnormalized form)
    for (double rho : {0.01, 0.1, 0.5}) {
        const auto xs = random_stream(20, 42, 0.3);
        ShiryaevState s;
        s.rho = rho;
        s.eta = kPosInf;
        for (std::size_t n = 1; n <= xs.size(); ++n) {
            s.step(xs[n - 1]);
            CHECK(s.log_sum_statistic() ==
                  doctest::Approx(oracle::shiryaev_double_sum(xs, n, rho)).epsilon(1e-9));
        }
    }
}

TEST_CASE("shiryaev with zero llr follows the geometric closed forms") {
    ShiryaevState s;
    s.rho = 0.5;
    s.eta = kPosInf;
    double prev = kNegInf;
    for (int n = 1; n <= 30; ++n) {
        s.step(0.0);
        // prior mass alone drives the posterior: odds = 2^n - 1
        CHECK(s.statistic() ==
              doctest::Approx(std::log(std::pow(2.0, n) - 1.0)).epsilon(1e-12));
        // unnormalized sum saturates toward 0 from below
        CHECK(s.log_sum_statistic() ==
              doctest::Approx(std::log1p(-std::pow(0.5, n))).epsilon(1e-12));
        CHECK(s.statistic() > prev);
        prev = s.statistic();
    }
    CHECK(s.log_sum_statistic() < 0.0);
}

TEST_CASE("sr recursion") {
    auto [s1, a1] = sr_step(SrState{0.0, 10.0, 0}, 1.0);
    CHECK(s1.r == doctest::Approx(1.0));
    CHECK_FALSE(a1);

    auto [s2, a2] = sr_step(SrState{3.0, 10.0, 0}, 2.5);
    CHECK(s2.r == doctest::Approx(2.5 * 4.0));
    CHECK(a2);

    SrState unit{0.0, kPosInf, 0};
    for (int n = 1; n <= 50; ++n) {
        unit.step(1.0);
        CHECK(unit.r == doctest::Approx(static_cast<double>(n)).epsilon(1e-12));
    }

    SrState bad{0.0, 1.0, 0};
    CHECK_THROWS_AS(bad.step(-0.1), std::invalid_argument);
}

TEST_CASE("glr closed-form supremum, hand-evaluated case") {
    GlrState g(0.1, 3.0, kPosInf, 50);
    for (int i = 0; i < 4; ++i) g.step(0.5);
    // start k=1: mean 0.5 inside the band, value 0.5*2 - 4*0.125 = 0.5
    CHECK(g.statistic() == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("glr clamps theta at the band edge for large observations") {
    GlrState g(0.1, 3.0, kPosInf, 50);
    double expect = 0.0;
    for (int n = 1; n <= 6; ++n) {
        g.step(5.0);
        // theta* = 3 at every start; best start is k=1: 3*(5n) - n*4.5
        expect = 3.0 * 5.0 * n - static_cast<double>(n) * 4.5;
        CHECK(g.statistic() == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("glr statistic matches a dense theta-grid search") {
    for (std::uint64_t trial = 0; trial < 5; ++trial) {
        const auto xs = random_stream(50, 7000 + trial, 0.2);
        GlrState g(0.1, 3.0, kPosInf, 50);
        for (std::size_t n = 1; n <= xs.size(); ++n) {
            g.step(xs[n - 1]);
            const double grid = oracle::glr_grid_max(xs, n, 0.1, 3.0, 50, 1e-4);
            CHECK(std::fabs(g.statistic() - grid) < 1e-6);
        }
    }
}

TEST_CASE("glr with window >= stream length equals the unwindowed statistic") {
    const auto xs = random_stream(120, 99, 0.1);
    GlrState small(0.1, 3.0, kPosInf, 120);
    GlrState big(0.1, 3.0, kPosInf, 5000);
    for (double x : xs) {
        small.step(x);
        big.step(x);
        CHECK(small.statistic() == doctest::Approx(big.statistic()).epsilon(1e-13));
    }
}

TEST_CASE("glr evicts the oldest start when the window is exceeded") {
    GlrState g(0.1, 3.0, kPosInf, 3);
    for (double x : {4.0, 0.0, 0.0, 0.0}) g.step(x);
    CHECK(g.retained_starts() == 3);
    // the spike at t=1 fell out of the window: remaining starts see only zeros
    const double all_zero = 0.1 * 0.0 - 0.5 * 1.0 * 0.01;
    CHECK(g.statistic() == doctest::Approx(all_zero).epsilon(1e-12));
}

TEST_CASE("run_to_alarm basics") {
    SUBCASE("deterministic ramp crosses at eta") {
        CusumState s{0.0, 5.0, 0};
        const RunResult r = run_to_alarm(s, [] { return 1.0; }, 1000);
        CHECK(r.tau == 5);
        CHECK_FALSE(r.censored);
    }
    SUBCASE("nonpositive eta alarms immediately when the statistic reaches it") {
        CusumState s{0.0, -100.0, 0};
        const RunResult r = run_to_alarm(s, [] { return -1.0; }, 1000);
        CHECK(r.tau == 1);
    }
    SUBCASE("censoring at max_len") {
        CusumState s{0.0, kPosInf, 0};
        const RunResult r = run_to_alarm(s, [] { return 1.0; }, 100);
        CHECK(r.censored);
        CHECK(r.tau == 100);
    }
}

TEST_CASE("stopping time is nondecreasing in the threshold for every family") {
    const auto xs = random_stream(4000, 31337, 0.05);
    const auto tau_for = [&](auto make_state) {
        auto st = make_state();
        std::size_t i = 0;
        const RunResult r = run_to_alarm(st, [&] { return xs[i++]; },
                                         static_cast<std::int64_t>(xs.size()));
        return r.tau;
    };
    const std::vector<double> etas = {0.5, 1.0, 2.0, 4.0};
    std::vector<std::int64_t> taus;

    for (double eta : etas) taus.push_back(tau_for([&] { return CusumState{0.0, eta, 0}; }));
    for (std::size_t i = 1; i < taus.size(); ++i) CHECK(taus[i - 1] <= taus[i]);

    taus.clear();
    for (double eta : etas) taus.push_back(tau_for([&] {
        ShiryaevState s;
        s.rho = 0.1;
        s.eta = eta;
        return s;
    }));
    for (std::size_t i = 1; i < taus.size(); ++i) CHECK(taus[i - 1] <= taus[i]);

    taus.clear();
    for (double eta : {5.0, 20.0, 100.0, 400.0}) {
        // SR consumes likelihood ratios
        auto st = SrState{0.0, eta, 0};
        std::size_t i = 0;
        const RunResult r = run_to_alarm(st, [&] { return std::exp(xs[i++]); },
                                         static_cast<std::int64_t>(xs.size()));
        taus.push_back(r.tau);
    }
    for (std::size_t i = 1; i < taus.size(); ++i) CHECK(taus[i - 1] <= taus[i]);

    taus.clear();
    for (double eta : etas) taus.push_back(tau_for([&] { return GlrState(0.1, 3.0, eta, 200); }));
    for (std::size_t i = 1; i < taus.size(); ++i) CHECK(taus[i - 1] <= taus[i]);
}

TEST_CASE("raising one llr never lowers the cusum or shiryaev statistic") {
    const auto xs = random_stream(40, 2222);
    for (std::size_t bump = 0; bump < xs.size(); bump += 7) {
        auto ys = xs;
        ys[bump] += 0.8;

        CusumState cx{0.0, kPosInf, 0}, cy{0.0, kPosInf, 0};
        ShiryaevState sx, sy;
        sx.rho = sy.rho = 0.1;
        sx.eta = sy.eta = kPosInf;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            cx.step(xs[i]);
            cy.step(ys[i]);
            sx.step(xs[i]);
            sy.step(ys[i]);
            CHECK(cy.s >= cx.s);
            CHECK(sy.statistic() >= sx.statistic());
        }
    }
}

TEST_CASE("observation-driven wrapper routes inputs per family") {
    const Llr llr = AffineLlr{1.0, -0.5};

    DetectorModel cus;
    cus.spec.family = DetectorFamily::cusum;
    cus.spec.eta = 0.4;
    cus.llr = llr;
    ObsDetector dc(cus);
    CHECK(dc.step_obs(1.0)); // llr = 0.5 >= 0.4

    DetectorModel sr;
    sr.spec.family = DetectorFamily::sr;
    sr.spec.eta = 1.5;
    sr.llr = llr;
    ObsDetector ds(sr);
    CHECK_FALSE(ds.step_obs(0.5)); // lr = 1, R = 1
    CHECK(ds.step_obs(0.5));       // R = 1 * (1+1) = 2 >= 1.5

    DetectorModel sr_psi = sr;
    sr_psi.spec.sr_psi = Distribution::exponential(1.0);
    ObsDetector dpsi(sr_psi);
    Rng rng(Seed{1, 2});
    dpsi.reset(&rng);
    CHECK(dpsi.statistic() > 0.0); // randomized start drew R_0 from psi
    CHECK_THROWS_AS(dpsi.reset(nullptr), std::logic_error);
}
