#include "qcd/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qcd/errors.hpp"
#include "qcd/parallel.hpp"

namespace qcd {

namespace {

EstimateWithError summarize(const std::vector<double>& values, std::int64_t censored,
                            const Seed& seed) {
    const auto n = static_cast<std::int64_t>(values.size());
    EstimateWithError e;
    e.seed = seed;
    e.n_runs = n;
    if (n == 0) return e;
    double sum = 0;
    for (double v : values) sum += v;
    e.value = sum / static_cast<double>(n);
    double ss = 0;
    for (double v : values) ss += (v - e.value) * (v - e.value);
    e.std_error = (n > 1) ? std::sqrt(ss / static_cast<double>(n - 1)) /
                                std::sqrt(static_cast<double>(n))
                          : 0.0;
    e.censored_fraction = static_cast<double>(censored) / static_cast<double>(n);
    return e;
}

std::int64_t draw_change_point(const ChangeModel& model, Rng& rng) {
    if (model.kind == ChangeModel::Kind::fixed_lambda) return model.lambda;
    const double u = rng.uniform01();
    return 1 + static_cast<std::int64_t>(std::floor(std::log1p(-u) / std::log1p(-model.rho)));
}

// One conditional-delay grid point: pre-change prefix of lambda-1 draws, then
// post-change data; runs alarming inside the prefix are dropped.
EstimateWithError conditional_delay_at(const DetectorModel& model, const Distribution& nu0,
                                       const Distribution& nu1, std::int64_t lambda,
                                       double delay_offset, std::int64_t n_runs,
                                       std::int64_t max_len, const Seed& seed, int threads,
                                       std::int64_t* retained_out) {
    const ChangeModel change = ChangeModel::fixed(lambda);
    std::vector<double> delay(static_cast<std::size_t>(n_runs));
    std::vector<unsigned char> keep(static_cast<std::size_t>(n_runs), 0);
    std::vector<unsigned char> cens(static_cast<std::size_t>(n_runs), 0);
    const ObsDetector proto(model);
    parallel_for(n_runs, threads, [&](std::int64_t i) {
        Rng rng(with_stream(seed, static_cast<std::uint64_t>(i)));
        const std::int64_t cp = draw_change_point(change, rng);
        ObsDetector det = proto;
        det.reset(&rng);
        for (std::int64_t t = 1; t < cp; ++t)
            if (det.step_obs(nu0.sample_one(rng))) return; // false alarm: discard
        for (std::int64_t t = cp; t <= max_len; ++t) {
            if (det.step_obs(nu1.sample_one(rng))) {
                delay[static_cast<std::size_t>(i)] = static_cast<double>(t - cp) + delay_offset;
                keep[static_cast<std::size_t>(i)] = 1;
                return;
            }
        }
        delay[static_cast<std::size_t>(i)] = static_cast<double>(max_len - cp) + delay_offset;
        keep[static_cast<std::size_t>(i)] = 1;
        cens[static_cast<std::size_t>(i)] = 1;
    });
    std::vector<double> kept;
    kept.reserve(static_cast<std::size_t>(n_runs));
    std::int64_t censored = 0;
    for (std::int64_t i = 0; i < n_runs; ++i) {
        if (!keep[static_cast<std::size_t>(i)]) continue;
        kept.push_back(delay[static_cast<std::size_t>(i)]);
        censored += cens[static_cast<std::size_t>(i)];
    }
    if (retained_out) *retained_out = static_cast<std::int64_t>(kept.size());
    return summarize(kept, censored, seed);
}

} // namespace

DelayEstimate estimate_wdd(const DetectorModel& model, const Distribution& nu0,
                           const Distribution& nu1, std::int64_t n_runs, std::int64_t max_len,
                           const Seed& seed, int threads,
                           const std::vector<std::int64_t>& glr_lambda_grid) {
    DelayEstimate out;
    out.metric = DelayEstimate::Metric::wdd;

    if (model.spec.family == DetectorFamily::cusum) {
        // Delay counts the change point itself: (tau - 1 + 1) = tau at lambda=1.
        out.estimate = conditional_delay_at(model, nu0, nu1, 1, 1.0, n_runs, max_len,
                                            derive(seed, "wdd|" + describe(model) + "|nu1=" +
                                                             nu1.describe()),
                                            threads, nullptr);
        return out;
    }
    if (model.spec.family != DetectorFamily::glr)
        throw std::invalid_argument("estimate_wdd: supported for cusum and glr detectors only");

    if (glr_lambda_grid.empty())
        throw std::invalid_argument("estimate_wdd: empty lambda grid");
    out.lambda_grid = glr_lambda_grid;
    std::size_t best = 0;
    for (std::size_t j = 0; j < glr_lambda_grid.size(); ++j) {
        const std::int64_t lambda = glr_lambda_grid[j];
        std::int64_t retained = 0;
        const Seed s = derive(seed, "wdd|" + describe(model) + "|nu1=" + nu1.describe() +
                                        "|lambda=" + std::to_string(lambda));
        EstimateWithError e = conditional_delay_at(model, nu0, nu1, lambda, 1.0, n_runs,
                                                   lambda + max_len, s, threads, &retained);
        out.per_lambda.push_back(e);
        out.retained_per_lambda.push_back(retained);
        if (retained < 100) out.low_retention_warning = true;
        if (e.value > out.per_lambda[best].value) best = j;
    }
    out.estimate = out.per_lambda[best];
    return out;
}

DelayEstimate estimate_add(const DetectorModel& model, const Distribution& nu0,
                           const Distribution& nu1, double rho, std::int64_t n_runs,
                           std::int64_t max_len, const Seed& seed, int threads) {
    if (!(rho > 0) || !(rho < 1)) throw std::invalid_argument("estimate_add: rho in (0,1)");
    DelayEstimate out;
    out.metric = DelayEstimate::Metric::add;
    const Seed s = derive(seed, "add|" + describe(model) + "|nu0=" + nu0.describe() +
                                    "|nu1=" + nu1.describe() + "|rho=" + std::to_string(rho));
    const ChangeModel change = ChangeModel::geometric(rho);
    std::vector<double> vals(static_cast<std::size_t>(n_runs));
    std::vector<unsigned char> cens(static_cast<std::size_t>(n_runs), 0);
    const ObsDetector proto(model);
    parallel_for(n_runs, threads, [&](std::int64_t i) {
        Rng rng(with_stream(s, static_cast<std::uint64_t>(i)));
        const std::int64_t lambda = draw_change_point(change, rng);
        ObsDetector det = proto;
        det.reset(&rng);
        std::int64_t tau = max_len;
        bool censored = true;
        for (std::int64_t t = 1; t <= max_len; ++t) {
            const double x = (t < lambda) ? nu0.sample_one(rng) : nu1.sample_one(rng);
            if (det.step_obs(x)) {
                tau = t;
                censored = false;
                break;
            }
        }
        vals[static_cast<std::size_t>(i)] =
            tau > lambda ? static_cast<double>(tau - lambda) : 0.0;
        cens[static_cast<std::size_t>(i)] = censored ? 1 : 0;
    });
    std::int64_t censored = 0;
    for (auto c : cens) censored += c;
    out.estimate = summarize(vals, censored, s);
    return out;
}

DelayEstimate estimate_jsrp(const DetectorModel& model, const Distribution& nu0,
                            const Distribution& nu1, const std::vector<std::int64_t>& lambda_grid,
                            std::int64_t n_runs, std::int64_t max_len, const Seed& seed,
                            int threads) {
    if (lambda_grid.empty()) throw std::invalid_argument("estimate_jsrp: empty lambda grid");
    DelayEstimate out;
    out.metric = DelayEstimate::Metric::jsrp;
    out.lambda_grid = lambda_grid;
    std::size_t best = 0;
    for (std::size_t j = 0; j < lambda_grid.size(); ++j) {
        const std::int64_t lambda = lambda_grid[j];
        std::int64_t retained = 0;
        const Seed s = derive(seed, "jsrp|" + describe(model) + "|nu1=" + nu1.describe() +
                                        "|lambda=" + std::to_string(lambda));
        EstimateWithError e = conditional_delay_at(model, nu0, nu1, lambda, 0.0, n_runs,
                                                   lambda + max_len, s, threads, &retained);
        out.per_lambda.push_back(e);
        out.retained_per_lambda.push_back(retained);
        if (retained < 100) out.low_retention_warning = true;
        if (e.value > out.per_lambda[best].value) best = j;
    }
    out.estimate = out.per_lambda[best];
    return out;
}

AsymptoticBound asymptotic_bound(const Distribution& nu0, const Distribution& nu1,
                                 const LfdPair& lfd, double alpha) {
    if (!(alpha > 0) || !(alpha < 1))
        throw std::invalid_argument("asymptotic_bound: alpha in (0,1)");
    const double info = kl_divergence(nu1, lfd.nu0_bar) - kl_divergence(nu1, lfd.nu1_under);
    if (!(info > 0))
        throw NonInformative("mean llr drift under nu1 is not positive");
    AsymptoticBound b;
    b.info = info;
    b.delay_bound = std::fabs(std::log(alpha)) / info;
    b.factor = kl_divergence(nu1, nu0) / info;
    return b;
}

} // namespace qcd
