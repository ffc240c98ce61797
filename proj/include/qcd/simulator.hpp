#pragma once
#include <cstdint>
#include <vector>

#include "qcd/calibration.hpp"
#include "qcd/uncertainty.hpp"

namespace qcd {

// Observation model around a change point: i.i.d. nu0 strictly before
// lambda, i.i.d. nu1 from lambda on.
struct ChangeModel {
    enum class Kind { fixed_lambda, geometric_lambda };
    Kind kind = Kind::fixed_lambda;
    std::int64_t lambda = 1;
    double rho = 0.1;

    static ChangeModel fixed(std::int64_t lambda) {
        return ChangeModel{Kind::fixed_lambda, lambda, 0.0};
    }
    static ChangeModel geometric(double rho) { return ChangeModel{Kind::geometric_lambda, 1, rho}; }
};

struct DelayEstimate {
    enum class Metric { wdd, add, jsrp };
    Metric metric = Metric::wdd;
    EstimateWithError estimate;
    std::vector<std::int64_t> lambda_grid;         // empty when a grid was not used
    std::vector<EstimateWithError> per_lambda;     // parallel to lambda_grid
    std::vector<std::int64_t> retained_per_lambda; // runs surviving the burn-in
    bool low_retention_warning = false;            // some grid point kept < 100 runs
};

// Worst-case detection delay.
//   cusum: change at lambda=1 from the reset state (the worst pre-change
//          state for the cusum statistic), mean stopping time.
//   glr:   the statistic has window-long memory, so the delay is measured at
//          each lambda in glr_lambda_grid with a genuine pre-change prefix
//          (runs alarming during the prefix are discarded) and the max is
//          reported.
// Other families are rejected.
DelayEstimate estimate_wdd(const DetectorModel& model, const Distribution& nu0,
                           const Distribution& nu1, std::int64_t n_runs, std::int64_t max_len,
                           const Seed& seed, int threads = 0,
                           const std::vector<std::int64_t>& glr_lambda_grid = {1, 10, 100, 1000});

// Bayesian average detection delay E[(tau - Lambda)^+] with a geometric(rho)
// change point resampled each replication.
DelayEstimate estimate_add(const DetectorModel& model, const Distribution& nu0,
                           const Distribution& nu1, double rho, std::int64_t n_runs,
                           std::int64_t max_len, const Seed& seed, int threads = 0);

// Worst-case conditional average delay sup_lambda E[tau - lambda | tau >= lambda],
// maximized over the given lambda grid; runs with tau < lambda are discarded.
DelayEstimate estimate_jsrp(const DetectorModel& model, const Distribution& nu0,
                            const Distribution& nu1, const std::vector<std::int64_t>& lambda_grid,
                            std::int64_t n_runs, std::int64_t max_len, const Seed& seed,
                            int threads = 0);

struct AsymptoticBound {
    double delay_bound = 0; // |log alpha| / I, I = D(nu1||nu0_bar) - D(nu1||nu1_under)
    double factor = 0;      // D(nu1||nu0) / I, delay inflation of the robust test
    double info = 0;        // I itself
};

// Small-alpha delay bound for the robust cusum and the analytic cap on its
// delay ratio versus the oracle test. Throws NonInformative when I <= 0.
AsymptoticBound asymptotic_bound(const Distribution& nu0, const Distribution& nu1,
                                 const LfdPair& lfd, double alpha);

} // namespace qcd
