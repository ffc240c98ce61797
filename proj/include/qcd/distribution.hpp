#pragma once
#include <memory>
#include <string>
#include <vector>

#include "qcd/numeric.hpp"
#include "qcd/rng.hpp"

namespace qcd {

struct Interval {
    double lo = kNegInf;
    double hi = kPosInf;
};

namespace detail {
class DistImpl;
}

// Immutable probability law on the reals. Values are cheap to copy (shared
// immutable state) and safe to share across threads; sampling state lives in
// the caller-owned Rng.
//
// Conventions:
//   - exponential(rate) has mean 1/rate
//   - huber_censored0/1 are the censored least-favorable laws of an
//     epsilon-contamination pair: the nominal density is kept where the
//     nominal likelihood ratio p1/p0 is moderate and replaced by a scaled
//     copy of the other density beyond the censoring threshold.
class Distribution {
public:
    enum class Kind { gaussian, exponential, mixture, huber_censored0, huber_censored1 };

    static Distribution gaussian(double mean, double sd);
    static Distribution exponential(double rate);
    static Distribution mixture(std::vector<double> weights,
                                std::vector<Distribution> components);
    static Distribution huber_censored0(const Distribution& p0, const Distribution& p1,
                                        double eps, double b);
    static Distribution huber_censored1(const Distribution& p0, const Distribution& p1,
                                        double eps, double a);

    Kind kind() const;

    // Natural-log density; -inf where the density is zero.
    double log_density(double x) const;

    // Right-continuous CDF in [0,1].
    double cdf(double x) const;

    // Exact inverse CDF (closed-form where available, monotone bisection
    // otherwise). Sampling for the censored laws goes through a precomputed
    // table instead; quantile() is the slow reference path.
    double quantile(double u) const;

    double sample_one(Rng& rng) const;
    std::vector<double> sample(const Seed& seed, std::size_t n) const;

    Interval support() const;

    // Finite interval carrying all but ~tail_mass of probability on each
    // side; used to truncate quadratures.
    Interval quantile_range(double tail_mass) const;

    // Canonical parameter string; doubles as structural identity.
    const std::string& describe() const;

    bool operator==(const Distribution& other) const { return describe() == other.describe(); }

    struct GaussianParams {
        double mean, sd;
    };
    struct ExponentialParams {
        double rate;
    };
    GaussianParams as_gaussian() const;      // throws if kind() != gaussian
    ExponentialParams as_exponential() const;

private:
    explicit Distribution(std::shared_ptr<const detail::DistImpl> impl);
    std::shared_ptr<const detail::DistImpl> impl_;
};

// Kullback-Leibler divergence D(p || q), closed form for same-family
// gaussian/exponential pairs, adaptive quadrature (abs tol 1e-8) otherwise.
// Returns +inf when p's support is not contained in q's.
double kl_divergence(const Distribution& p, const Distribution& q);

} // namespace qcd
