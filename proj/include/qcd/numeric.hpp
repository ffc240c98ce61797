#pragma once
#include <cmath>
#include <functional>
#include <limits>

namespace qcd {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kPosInf = std::numeric_limits<double>::infinity();
inline constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

inline double log_sum_exp(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    const double hi = (a > b) ? a : b;
    const double lo = (a > b) ? b : a;
    return hi + std::log1p(std::exp(lo - hi));
}

double normal_cdf(double z);

// Inverse standard normal CDF (Wichura's PPND16), accurate to ~1e-15.
double normal_quantile(double p);

// Adaptive Gauss-Kronrod (G7,K15) quadrature on a finite interval with an
// absolute-error target. Subdivides until the local K-G error estimate is
// below the tolerance share of each subinterval.
double integrate(const std::function<double(double)>& f, double lo, double hi,
                 double abs_tol);

// Bisection for a root of f on [lo, hi]; requires a sign change. Runs until
// the bracket is narrower than x_tol (plus a relative floor near large roots).
double bisect_root(const std::function<double(double)>& f, double lo, double hi,
                   double x_tol);

} // namespace qcd
