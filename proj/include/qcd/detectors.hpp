#pragma once
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "qcd/llr.hpp"
#include "qcd/numeric.hpp"
#include "qcd/rng.hpp"

namespace qcd {

// Online stopping rules as plain value-type state machines. One step consumes
// one input (log-likelihood ratio, likelihood ratio, or raw observation,
// depending on the family) and reports whether the alarm threshold was
// crossed. Alarm comparisons are >= throughout.

// S_{n+1} = S_n^+ + llr ; equals max_{1<=k<=n} sum_{i=k}^n llr_i.
struct CusumState {
    double s = 0;
    double eta = 0;
    std::int64_t n = 0;

    bool step(double llr) {
        s = (s > 0.0 ? s : 0.0) + llr;
        ++n;
        return s >= eta;
    }
    double statistic() const { return s; }
};

inline std::pair<CusumState, bool> cusum_step(CusumState s, double llr) {
    const bool alarm = s.step(llr);
    return {s, alarm};
}

// Posterior-odds statistic of the change under a geometric(rho) prior. With
// T_n = sum_{k<=n} (1-rho)^{k-1} exp(sum_{i=k}^n llr_i), the posterior odds
// of a change by time n are rho * T_n / (1-rho)^n; log_t tracks the
// normalized log T_n - n log(1-rho), which obeys the O(1) stable recursion
//   log_t' = llr + log(exp(log_t) + 1) - log(1-rho).
// Thresholding the raw sum log(rho T_n) instead would tighten the effective
// posterior threshold over time and lose Bayes optimality; log_sum_statistic
// exposes that raw form for cross-checks against the defining double sum.
struct ShiryaevState {
    double log_t = kNegInf;
    double rho = 0.1;
    double eta = 0;
    std::int64_t n = 0;

    bool step(double llr) {
        log_t = llr + log_sum_exp(log_t, 0.0) - std::log1p(-rho);
        ++n;
        return statistic() >= eta;
    }
    // posterior log odds of the change
    double statistic() const { return std::log(rho) + log_t; }
    // log(rho * T_n), the unnormalized double-sum form
    double log_sum_statistic() const {
        return statistic() + static_cast<double>(n) * std::log1p(-rho);
    }
};

inline std::pair<ShiryaevState, bool> shiryaev_step(ShiryaevState s, double llr) {
    const bool alarm = s.step(llr);
    return {s, alarm};
}

// Shiryaev-Roberts: R_{n+1} = lr * (1 + R_n) with the likelihood ratio
// lr = exp(llr), started at a fixed r or at a draw from a caller-supplied
// initialization law.
struct SrState {
    double r = 0;
    double eta = 0;
    std::int64_t n = 0;

    bool step(double lr) {
        if (lr < 0.0) throw std::invalid_argument("sr_step: negative likelihood ratio");
        r = lr * (1.0 + r);
        ++n;
        return r >= eta;
    }
    double statistic() const { return r; }
};

inline std::pair<SrState, bool> sr_step(SrState s, double lr) {
    const bool alarm = s.step(lr);
    return {s, alarm};
}

// Window-limited GLR for a gaussian mean band with unit sd against N(0,1):
// statistic = max over the most recent `window` start points k of
//   sup_{theta in [lo,hi]} sum_{i=k}^n (theta x_i - theta^2/2),
// the inner sup in closed form at theta* = clamp(mean of the segment, lo, hi).
// Per-start sums are held as prefix-sum snapshots in a ring buffer.
class GlrState {
public:
    GlrState(double theta_lo, double theta_hi, double eta, std::int64_t window)
        : theta_lo_(theta_lo), theta_hi_(theta_hi), eta_(eta),
          window_(static_cast<std::size_t>(window)) {
        if (window < 1) throw std::invalid_argument("glr: window must be >= 1");
        if (!(theta_lo <= theta_hi)) throw std::invalid_argument("glr: bad theta bounds");
        buf_.resize(window_);
        inv_m_.resize(window_ + 1, 0.0);
        for (std::size_t m = 1; m <= window_; ++m)
            inv_m_[m] = 1.0 / static_cast<double>(m);
    }

    bool step(double x) {
        if (count_ < window_) {
            buf_[(head_ + count_) % window_] = cum_;
            ++count_;
        } else {
            buf_[head_] = cum_; // newest start replaces the evicted oldest slot
            head_ = (head_ + 1) % window_;
        }
        cum_ += x;
        ++n;

        double best = kNegInf;
        std::size_t m = count_;
        std::size_t idx = head_;
        for (std::size_t j = 0; j < count_; ++j) {
            const double seg = cum_ - buf_[idx];
            double theta = seg * inv_m_[m];
            if (theta < theta_lo_) theta = theta_lo_;
            else if (theta > theta_hi_) theta = theta_hi_;
            const double v = theta * (seg - 0.5 * static_cast<double>(m) * theta);
            if (v > best) best = v;
            --m;
            if (++idx == window_) idx = 0;
        }
        stat_ = best;
        return stat_ >= eta_;
    }

    double statistic() const { return stat_; }
    double eta() const { return eta_; }
    std::int64_t retained_starts() const { return static_cast<std::int64_t>(count_); }

    std::int64_t n = 0;

private:
    double theta_lo_, theta_hi_, eta_;
    std::size_t window_;
    std::vector<double> buf_; // prefix sums C_{k-1} of retained starts
    std::vector<double> inv_m_;
    std::size_t head_ = 0, count_ = 0;
    double cum_ = 0;
    double stat_ = kNegInf;
};

inline std::pair<GlrState, bool> glr_step(GlrState s, double x) {
    const bool alarm = s.step(x);
    return {s, alarm};
}

struct RunResult {
    std::int64_t tau = 0;
    bool censored = false;
};

// Drive any detector state over a stream of its inputs until the first alarm
// or max_len steps (then censored, tau = max_len).
template <typename State, typename Source>
RunResult run_to_alarm(State& state, Source&& next_input, std::int64_t max_len) {
    for (std::int64_t i = 1; i <= max_len; ++i)
        if (state.step(next_input())) return {i, false};
    return {max_len, true};
}

// ---------------------------------------------------------------------------

enum class DetectorFamily { cusum, shiryaev, sr, glr };

struct DetectorSpec {
    DetectorFamily family = DetectorFamily::cusum;
    double eta = 0;
    double rho = 0.1;     // shiryaev change prior
    double sr_init = 0;   // SR fixed start r
    std::optional<Distribution> sr_psi; // SR randomized start law on [0, inf)
    std::int64_t window = 2000;         // glr
    double theta_lo = 0, theta_hi = 0;  // glr mean band
};

std::string family_name(DetectorFamily f);
std::string describe(const DetectorSpec& spec);

// A detector plus the log-likelihood ratio it runs on (unused by GLR, which
// consumes raw observations).
struct DetectorModel {
    DetectorSpec spec;
    Llr llr = AffineLlr{1.0, 0.0};
};

std::string describe(const DetectorModel& model);

// Observation-driven wrapper used by the Monte Carlo layers.
class ObsDetector {
public:
    explicit ObsDetector(DetectorModel model);

    // Fresh run; draws the SR start from sr_psi when configured (rng required
    // in that case).
    void reset(Rng* rng = nullptr);

    bool step_obs(double x) {
        switch (model_.spec.family) {
        case DetectorFamily::cusum:
            return std::get<CusumState>(state_).step(eval(model_.llr, x));
        case DetectorFamily::shiryaev:
            return std::get<ShiryaevState>(state_).step(eval(model_.llr, x));
        case DetectorFamily::sr:
            return std::get<SrState>(state_).step(std::exp(eval(model_.llr, x)));
        case DetectorFamily::glr:
            return std::get<GlrState>(state_).step(x);
        }
        return false;
    }

    double statistic() const;
    const DetectorModel& model() const { return model_; }

private:
    void init(Rng* rng, bool allow_skipped_psi_draw);

    DetectorModel model_;
    std::variant<CusumState, ShiryaevState, SrState, GlrState> state_;
};

} // namespace qcd
