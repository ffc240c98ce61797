#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "qcd/distribution.hpp"
#include "qcd/errors.hpp"
#include "qcd/llr.hpp"

namespace qcd {

// A family of candidate laws for one side of the change.
class UncertaintyClass {
public:
    enum class Kind { singleton, gaussian_mean_band, exp_rate_ray, eps_contamination };

    static UncertaintyClass singleton(Distribution d);
    static UncertaintyClass gaussian_mean_band(double lo, double hi, double sd);
    static UncertaintyClass exp_rate_ray(double theta_min);
    static UncertaintyClass eps_contamination(Distribution nominal, double eps);

    Kind kind() const { return kind_; }
    const Distribution& nominal() const; // singleton member / contamination nominal
    double band_lo() const { return band_lo_; }
    double band_hi() const { return band_hi_; }
    double band_sd() const { return band_sd_; }
    double theta_min() const { return theta_min_; }
    double eps() const { return eps_; }

    // Numerical membership test. For the contamination class this checks the
    // density lower bound d >= (1-eps) * nominal on a probe grid.
    bool contains(const Distribution& d) const;

    std::string describe() const;

private:
    UncertaintyClass() = default;
    Kind kind_ = Kind::singleton;
    std::vector<Distribution> dist_; // 0 or 1 elements
    double band_lo_ = 0, band_hi_ = 0, band_sd_ = 1;
    double theta_min_ = 0;
    double eps_ = 0;
};

// Least favorable pre/post-change pair with its log-likelihood ratio.
struct LfdPair {
    Distribution nu0_bar;
    Distribution nu1_under;
    Llr llr;
};

struct HuberThresholds {
    double a = 0;
    double b = kPosInf;
    double residual_a = 0; // |lhs - 1| of the defining mass identity for a
    double residual_b = 0;
};

// Censoring thresholds of the epsilon-contamination LFD pair around
// nominals (p0, p1) with monotone likelihood ratio p1/p0. Each threshold
// solves a one-dimensional mass identity; the two decouple and are found by
// bracketed bisection to 1e-12 on the unknown.
HuberThresholds huber_thresholds(const Distribution& p0, const Distribution& p1, double eps);

// Largest eps for which the censored pair is nondegenerate (a < b),
// bisected to 1e-6.
double huber_degeneracy_limit(const Distribution& p0, const Distribution& p1);

LfdPair solve_lfd(const UncertaintyClass& P0, const UncertaintyClass& P1);

// Either an analytic law or an empirical sample, viewed through its CDF.
class CdfView {
public:
    static CdfView analytic(Distribution d);
    static CdfView empirical(std::vector<double> samples);
    double cdf(double t) const;
    double quantile(double u) const;

private:
    CdfView() = default;
    std::vector<Distribution> dist_; // 0 or 1 elements
    std::vector<double> sorted_;
};

struct DominanceResult {
    bool dominates = false; // A stochastically larger than B (within tol)
    double margin = 0;      // min over the grid of CDF_B - CDF_A
};

// True iff CDF_A(t) <= CDF_B(t) + tol over an adaptive grid of ~2048 points
// spanning the pooled 1e-4..1-1e-4 quantile range, refined where the CDFs
// are closest.
DominanceResult dominates(const CdfView& a, const CdfView& b, double tol);

struct JsbMemberMargin {
    std::string member;
    bool pre_change = false; // which side of the pair the probe belongs to
    double margin = 0;
    bool pass = false;
};

struct JsbReport {
    bool pass = false;
    std::vector<JsbMemberMargin> margins;
    double tolerance = 0;
};

struct JsbOptions {
    std::int64_t samples = 100000;
    double tolerance = 0.01;
    Seed seed;
};

// Sampled verification of joint stochastic boundedness: the LFD llr pushed
// through nu0_bar must dominate its pushforward under every probed member of
// P0, and the pushforward under every probed member of P1 must dominate the
// one under nu1_under. Failures are reported, not thrown.
JsbReport check_jsb(const UncertaintyClass& P0, const UncertaintyClass& P1, const LfdPair& lfd,
                    const std::vector<Distribution>& probe_members, const JsbOptions& opt);

// Boundary-plus-grid probe members for parametric classes; contamination
// classes get gaussian contaminants at the given spreads.
std::vector<Distribution> default_probes(const UncertaintyClass& cls,
                                         const std::vector<double>& contaminant_sds);

} // namespace qcd
