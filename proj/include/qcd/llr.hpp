#pragma once
#include <memory>
#include <string>
#include <variant>

#include "qcd/distribution.hpp"

namespace qcd {

// Log-likelihood ratio log(d nu1 / d nu0) as a first-class value. Detectors
// consume it per observation; cells that simulate the same ratio share the
// same canonical description (and therefore the same derived seeds).

struct AffineLlr {
    double slope = 0.0;
    double intercept = 0.0;
};

struct PairLlr {
    Distribution num; // nu1
    Distribution den; // nu0
};

struct ClampedLlr;

using Llr = std::variant<AffineLlr, PairLlr, ClampedLlr>;

struct ClampedLlr {
    std::shared_ptr<const Llr> inner;
    double lo = kNegInf;
    double hi = kPosInf;
};

inline double eval(const Llr& llr, double x) {
    struct V {
        double x;
        double operator()(const AffineLlr& a) const { return a.slope * x + a.intercept; }
        double operator()(const PairLlr& p) const {
            return p.num.log_density(x) - p.den.log_density(x);
        }
        double operator()(const ClampedLlr& c) const {
            const double v = eval(*c.inner, x);
            if (v < c.lo) return c.lo;
            if (v > c.hi) return c.hi;
            return v;
        }
    };
    return std::visit(V{x}, llr);
}

inline std::string describe(const Llr& llr) {
    struct V {
        std::string operator()(const AffineLlr& a) const {
            char buf[96];
            std::snprintf(buf, sizeof(buf), "affine(%.17g,%.17g)", a.slope, a.intercept);
            return buf;
        }
        std::string operator()(const PairLlr& p) const {
            return "pair(" + p.num.describe() + "/" + p.den.describe() + ")";
        }
        std::string operator()(const ClampedLlr& c) const {
            char buf[64];
            std::snprintf(buf, sizeof(buf), ",%.17g,%.17g)", c.lo, c.hi);
            return "clamp(" + describe(*c.inner) + buf;
        }
    };
    return std::visit(V{}, llr);
}

inline Llr clamp_llr(Llr inner, double lo, double hi) {
    return ClampedLlr{std::make_shared<Llr>(std::move(inner)), lo, hi};
}

// Canonical LLR for a (nu0, nu1) pair: closed affine form for same-scale
// gaussian pairs and exponential pairs (on their support), generic density
// quotient otherwise.
inline Llr make_llr(const Distribution& nu0, const Distribution& nu1) {
    using Kind = Distribution::Kind;
    if (nu0.kind() == Kind::gaussian && nu1.kind() == Kind::gaussian) {
        const auto a = nu0.as_gaussian();
        const auto b = nu1.as_gaussian();
        if (a.sd == b.sd) {
            const double var = a.sd * a.sd;
            return AffineLlr{(b.mean - a.mean) / var,
                             (a.mean * a.mean - b.mean * b.mean) / (2.0 * var)};
        }
    }
    if (nu0.kind() == Kind::exponential && nu1.kind() == Kind::exponential) {
        const double r0 = nu0.as_exponential().rate;
        const double r1 = nu1.as_exponential().rate;
        return AffineLlr{r0 - r1, std::log(r1 / r0)};
    }
    return PairLlr{nu1, nu0};
}

} // namespace qcd
