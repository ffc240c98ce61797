#include "qcd/calibration.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "qcd/errors.hpp"
#include "qcd/parallel.hpp"

namespace qcd {

namespace {

EstimateWithError summarize(const std::vector<double>& values, std::int64_t censored,
                            const Seed& seed) {
    const auto n = static_cast<std::int64_t>(values.size());
    double sum = 0;
    for (double v : values) sum += v;
    const double mean = sum / static_cast<double>(n);
    double ss = 0;
    for (double v : values) ss += (v - mean) * (v - mean);
    const double sd = (n > 1) ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
    EstimateWithError e;
    e.value = mean;
    e.std_error = sd / std::sqrt(static_cast<double>(n));
    e.n_runs = n;
    e.censored_fraction = static_cast<double>(censored) / static_cast<double>(n);
    e.seed = seed;
    return e;
}

std::int64_t draw_geometric(Rng& rng, double rho) {
    const double u = rng.uniform01();
    return 1 + static_cast<std::int64_t>(std::floor(std::log1p(-u) / std::log1p(-rho)));
}

} // namespace

EstimateWithError estimate_mttfa(const DetectorModel& model, const Distribution& nu0,
                                 const McOptions& opt) {
    if (opt.n_runs < 1) throw std::invalid_argument("estimate_mttfa: n_runs must be >= 1");
    const auto n = opt.n_runs;
    std::vector<double> taus(static_cast<std::size_t>(n));
    std::vector<unsigned char> cens(static_cast<std::size_t>(n), 0);
    const ObsDetector proto(model);
    parallel_for(n, opt.threads, [&](std::int64_t i) {
        Rng rng(with_stream(opt.seed, static_cast<std::uint64_t>(i)));
        ObsDetector det = proto;
        det.reset(&rng);
        std::int64_t tau = opt.max_len;
        bool censored = true;
        for (std::int64_t t = 1; t <= opt.max_len; ++t) {
            if (det.step_obs(nu0.sample_one(rng))) {
                tau = t;
                censored = false;
                break;
            }
        }
        taus[static_cast<std::size_t>(i)] = static_cast<double>(tau);
        cens[static_cast<std::size_t>(i)] = censored ? 1 : 0;
    });
    std::int64_t censored = 0;
    for (auto c : cens) censored += c;
    return summarize(taus, censored, opt.seed);
}

EstimateWithError estimate_pfa(const DetectorModel& model, const Distribution& nu0,
                               const Distribution& /*nu1*/, double rho, std::int64_t n_runs,
                               const Seed& seed, int threads) {
    if (!(rho > 0) || !(rho < 1)) throw std::invalid_argument("estimate_pfa: rho in (0,1)");
    if (n_runs < 1) throw std::invalid_argument("estimate_pfa: n_runs must be >= 1");
    std::vector<double> hits(static_cast<std::size_t>(n_runs));
    const ObsDetector proto(model);
    parallel_for(n_runs, threads, [&](std::int64_t i) {
        Rng rng(with_stream(seed, static_cast<std::uint64_t>(i)));
        const std::int64_t lambda = draw_geometric(rng, rho);
        ObsDetector det = proto;
        det.reset(&rng);
        bool alarm = false;
        for (std::int64_t t = 1; t < lambda; ++t) {
            if (det.step_obs(nu0.sample_one(rng))) {
                alarm = true;
                break;
            }
        }
        hits[static_cast<std::size_t>(i)] = alarm ? 1.0 : 0.0;
    });
    return summarize(hits, 0, seed);
}

double initial_threshold_guess(double alpha) { return std::log(1.0 / alpha); }

namespace {

double xi_to_eta(const DetectorModel& base, double xi) {
    // The SR statistic lives on a ratio scale; search its threshold in logs
    // so the +/-2 bracket steps stay meaningful.
    return base.spec.family == DetectorFamily::sr ? std::exp(xi) : xi;
}

} // namespace

CalibrationResult calibrate_threshold(const DetectorModel& base, const Distribution& nu0,
                                      const CalibrationOptions& opt) {
    if (!(opt.alpha > 0) || !(opt.alpha < 1))
        throw std::invalid_argument("calibrate_threshold: alpha in (0,1)");

    const bool far_mode = opt.mode == CalibrationMode::far;
    const double target = far_mode ? 1.0 / opt.alpha : opt.alpha;
    const std::int64_t max_len =
        opt.max_len > 0 ? opt.max_len : static_cast<std::int64_t>(std::ceil(50.0 / opt.alpha));

    int evals = 0;
    std::int64_t total_runs = 0;
    const auto evaluate = [&](double xi, std::int64_t runs) {
        DetectorModel m = base;
        m.spec.eta = xi_to_eta(base, xi);
        const Seed s = derive(opt.seed, "cal|" + describe(m) + "|n=" + std::to_string(runs) +
                                            "|k=" + std::to_string(evals));
        ++evals;
        total_runs += runs;
        if (far_mode) return estimate_mttfa(m, nu0, McOptions{runs, max_len, s, opt.threads});
        return estimate_pfa(m, nu0, nu0, opt.rho, runs, s, opt.threads);
    };

    // "Low-eta side" predicate: mttfa rises with eta, pfa falls with it.
    const auto low_side = [&](double v) { return far_mode ? v < target : v > target; };

    double lo = initial_threshold_guess(opt.alpha);
    double hi = lo;
    EstimateWithError elo = evaluate(lo, opt.initial_runs);
    EstimateWithError ehi = elo;
    int guard = 0;
    while (!low_side(elo.value)) {
        lo -= 2.0;
        elo = evaluate(lo, opt.initial_runs);
        if (++guard > 50) throw BracketFailure("calibration bracket expansion failed (low)");
    }
    guard = 0;
    while (low_side(ehi.value)) {
        hi += 2.0;
        ehi = evaluate(hi, opt.initial_runs);
        if (++guard > 50) throw BracketFailure("calibration bracket expansion failed (high)");
    }

    std::int64_t budget = opt.initial_runs;
    int repairs = 0;
    for (int iter = 1; iter <= 400; ++iter) {
        budget = std::min(opt.iter_run_cap, budget * 2);
        const double mid = 0.5 * (lo + hi);
        const EstimateWithError est = evaluate(mid, budget);
        // Only accept once precision has stopped improving: stderr below the
        // relative floor, or the per-iterate cap reached. The total cap sizes
        // the doubling schedule; iterates at the cap may overrun it slightly
        // rather than hand back a low-precision threshold.
        const bool gate = 2.0 * est.std_error <= opt.rel_tol * target ||
                          budget >= opt.iter_run_cap || total_runs >= opt.total_run_cap;
        if (gate &&
            std::fabs(est.value - target) <= std::max(2.0 * est.std_error, opt.rel_tol * target)) {
            CalibrationResult r;
            r.eta = xi_to_eta(base, mid);
            r.achieved = est;
            r.target = target;
            r.mode = opt.mode;
            r.iterations = iter;
            r.total_runs = total_runs;
            return r;
        }
        if (low_side(est.value)) lo = mid;
        else hi = mid;
        // A noisy bracket endpoint can pin the search on a non-root; once the
        // interval has collapsed without acceptance, reopen it on the side
        // the latest (higher-budget) estimate points to.
        if (hi - lo < 1e-4 * std::max(1.0, std::fabs(mid))) {
            if (low_side(est.value)) hi += 1.0;
            else lo -= 1.0;
            if (++repairs > 40) throw BracketFailure("calibration bracket kept collapsing");
        }
    }
    throw std::runtime_error("calibrate_threshold: did not converge within 400 iterations");
}

CalibrationResult calibrate_threshold(const DetectorModel& base, const Distribution& nu0,
                                      const Distribution& /*nu1*/, const CalibrationOptions& opt) {
    return calibrate_threshold(base, nu0, opt);
}

} // namespace qcd
