#pragma once
#include <cstdint>

#include "qcd/detectors.hpp"
#include "qcd/distribution.hpp"

namespace qcd {

struct EstimateWithError {
    double value = 0;
    double std_error = 0; // sample standard deviation / sqrt(n_runs)
    std::int64_t n_runs = 0;
    double censored_fraction = 0;
    Seed seed;

    // Censored runs bias run-length means low; flag when non-negligible.
    bool censoring_warning() const { return censored_fraction > 0.01; }
};

struct McOptions {
    std::int64_t n_runs = 1000;
    std::int64_t max_len = 100000;
    Seed seed;
    int threads = 0;
};

// Mean stopping time under pure pre-change data (mean time to false alarm;
// FAR = 1/value).
EstimateWithError estimate_mttfa(const DetectorModel& model, const Distribution& nu0,
                                 const McOptions& opt);

// Fraction of runs alarming strictly before a geometric(rho) change point.
// Only pre-change observations can matter for that event, so nu1 is accepted
// for interface symmetry but never sampled.
EstimateWithError estimate_pfa(const DetectorModel& model, const Distribution& nu0,
                               const Distribution& nu1, double rho, std::int64_t n_runs,
                               const Seed& seed, int threads = 0);

enum class CalibrationMode { far, pfa };

struct CalibrationOptions {
    CalibrationMode mode = CalibrationMode::far;
    double alpha = 0.001;
    double rho = 0.1; // change prior for pfa mode
    std::int64_t initial_runs = 1000;
    std::int64_t iter_run_cap = 10000;
    std::int64_t total_run_cap = 100000;
    double rel_tol = 0.02;
    std::int64_t max_len = 0; // 0: 50/alpha for far mode
    Seed seed;
    int threads = 0;
};

struct CalibrationResult {
    double eta = 0;
    EstimateWithError achieved;
    double target = 0;
    CalibrationMode mode = CalibrationMode::far;
    int iterations = 0;
    std::int64_t total_runs = 0;
};

// Wald-style starting point for the threshold search (log scale for SR).
double initial_threshold_guess(double alpha);

// Monotone bracketed search for the alarm threshold meeting the false-alarm
// target: coarse +/-2 bracket expansion from the initial guess, then
// bisection with the per-iterate Monte Carlo budget doubling from
// initial_runs up to iter_run_cap. Accepts when the two-sided 95% interval
// covers the target (relative tolerance floor rel_tol).
CalibrationResult calibrate_threshold(const DetectorModel& base, const Distribution& nu0,
                                      const CalibrationOptions& opt);
CalibrationResult calibrate_threshold(const DetectorModel& base, const Distribution& nu0,
                                      const Distribution& nu1, const CalibrationOptions& opt);

} // namespace qcd
