#include "qcd/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace qcd {

// ---------------------------------------------------------------------------
// UncertaintyClass

UncertaintyClass UncertaintyClass::singleton(Distribution d) {
    UncertaintyClass c;
    c.kind_ = Kind::singleton;
    c.dist_.push_back(std::move(d));
    return c;
}

UncertaintyClass UncertaintyClass::gaussian_mean_band(double lo, double hi, double sd) {
    if (!(lo < hi)) throw std::invalid_argument("gaussian_mean_band: requires lo < hi");
    if (!(sd > 0)) throw std::invalid_argument("gaussian_mean_band: requires sd > 0");
    UncertaintyClass c;
    c.kind_ = Kind::gaussian_mean_band;
    c.band_lo_ = lo;
    c.band_hi_ = hi;
    c.band_sd_ = sd;
    return c;
}

UncertaintyClass UncertaintyClass::exp_rate_ray(double theta_min) {
    if (!(theta_min > 0)) throw std::invalid_argument("exp_rate_ray: requires theta_min > 0");
    UncertaintyClass c;
    c.kind_ = Kind::exp_rate_ray;
    c.theta_min_ = theta_min;
    return c;
}

UncertaintyClass UncertaintyClass::eps_contamination(Distribution nominal, double eps) {
    if (!(eps >= 0) || !(eps < 1))
        throw std::invalid_argument("eps_contamination: requires eps in [0,1)");
    UncertaintyClass c;
    c.kind_ = Kind::eps_contamination;
    c.dist_.push_back(std::move(nominal));
    c.eps_ = eps;
    return c;
}

const Distribution& UncertaintyClass::nominal() const {
    if (dist_.empty()) throw std::logic_error("class has no nominal member");
    return dist_.front();
}

bool UncertaintyClass::contains(const Distribution& d) const {
    switch (kind_) {
    case Kind::singleton:
        return d == nominal();
    case Kind::gaussian_mean_band: {
        if (d.kind() != Distribution::Kind::gaussian) return false;
        const auto g = d.as_gaussian();
        return std::fabs(g.sd - band_sd_) <= 1e-12 && g.mean >= band_lo_ - 1e-12 &&
               g.mean <= band_hi_ + 1e-12;
    }
    case Kind::exp_rate_ray:
        return d.kind() == Distribution::Kind::exponential &&
               d.as_exponential().rate >= theta_min_ - 1e-12;
    case Kind::eps_contamination: {
        // d in the class iff d - (1-eps)*nominal is a nonnegative measure.
        const Distribution& nom = nominal();
        const double floor_shift = std::log1p(-eps_);
        const Interval rn = nom.quantile_range(1e-7);
        const Interval rd = d.quantile_range(1e-7);
        const double lo = std::min(rn.lo, rd.lo);
        const double hi = std::max(rn.hi, rd.hi);
        const int n = 512;
        for (int i = 0; i <= n; ++i) {
            const double x = lo + (hi - lo) * static_cast<double>(i) / n;
            const double ln = nom.log_density(x);
            if (ln == kNegInf) continue;
            if (d.log_density(x) < floor_shift + ln - 1e-9) return false;
        }
        return true;
    }
    }
    return false;
}

std::string UncertaintyClass::describe() const {
    char buf[128];
    switch (kind_) {
    case Kind::singleton:
        return "singleton(" + nominal().describe() + ")";
    case Kind::gaussian_mean_band:
        std::snprintf(buf, sizeof(buf), "gaussian_band(%.17g,%.17g,%.17g)", band_lo_, band_hi_,
                      band_sd_);
        return buf;
    case Kind::exp_rate_ray:
        std::snprintf(buf, sizeof(buf), "exp_ray(%.17g)", theta_min_);
        return buf;
    case Kind::eps_contamination:
        std::snprintf(buf, sizeof(buf), ",eps=%.17g)", eps_);
        return "eps_contamination(" + nominal().describe() + buf;
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Huber censoring thresholds

namespace {

// The two mass identities are solved on an axis where log L is
// nondecreasing; a decreasing ratio is handled by reflecting x -> -x, which
// leaves both identities (and so a and b) unchanged.
struct MonotonePair {
    std::function<double(double)> log_ratio; // log p1/p0 on the working axis
    std::function<double(double)> cdf0, cdf1;
    double lo = 0, hi = 0; // working-axis search range
};

MonotonePair make_monotone_pair(const Distribution& p0, const Distribution& p1) {
    const Interval r0 = p0.quantile_range(1e-10);
    const Interval r1 = p1.quantile_range(1e-10);
    const double lo = std::min(r0.lo, r1.lo);
    const double hi = std::max(r0.hi, r1.hi);

    const auto ratio = [p0, p1](double x) {
        return p1.log_density(x) - p0.log_density(x);
    };

    // Direction check on a grid, ignoring points outside both supports.
    const int n = 1024;
    bool nondecreasing = true, nonincreasing = true;
    double prev = 0;
    bool have_prev = false;
    for (int i = 0; i <= n; ++i) {
        const double x = lo + (hi - lo) * static_cast<double>(i) / n;
        const double v = ratio(x);
        if (!std::isfinite(v)) continue;
        if (have_prev) {
            if (v < prev - 1e-9) nondecreasing = false;
            if (v > prev + 1e-9) nonincreasing = false;
        }
        prev = v;
        have_prev = true;
    }
    if (!nondecreasing && !nonincreasing)
        throw NonMonotoneLR("likelihood ratio p1/p0 is not monotone over the support");

    MonotonePair mp;
    if (nondecreasing) {
        mp.log_ratio = ratio;
        mp.cdf0 = [p0](double x) { return p0.cdf(x); };
        mp.cdf1 = [p1](double x) { return p1.cdf(x); };
        mp.lo = lo;
        mp.hi = hi;
    } else {
        mp.log_ratio = [ratio](double x) { return ratio(-x); };
        mp.cdf0 = [p0](double x) { return 1.0 - p0.cdf(-x); };
        mp.cdf1 = [p1](double x) { return 1.0 - p1.cdf(-x); };
        mp.lo = -hi;
        mp.hi = -lo;
    }
    return mp;
}

// Working-axis point where log L crosses log c; +/-inf when the threshold
// clears the whole range.
double crossing_point(const MonotonePair& mp, double log_c) {
    const double vlo = mp.log_ratio(mp.lo);
    const double vhi = mp.log_ratio(mp.hi);
    if (log_c >= vhi) return kPosInf;
    if (log_c <= vlo) return kNegInf;
    return bisect_root([&](double x) { return mp.log_ratio(x) - log_c; }, mp.lo, mp.hi,
                       1e-13 * std::max(1.0, std::fabs(mp.lo) + std::fabs(mp.hi)));
}

double mass_identity_b(const MonotonePair& mp, double eps, double b) {
    const double xb = crossing_point(mp, std::log(b));
    const double f0 = (xb == kPosInf) ? 1.0 : (xb == kNegInf ? 0.0 : mp.cdf0(xb));
    const double f1 = (xb == kPosInf) ? 1.0 : (xb == kNegInf ? 0.0 : mp.cdf1(xb));
    return (1.0 - eps) * (f0 + (1.0 - f1) / b);
}

double mass_identity_a(const MonotonePair& mp, double eps, double a) {
    const double xa = crossing_point(mp, std::log(a));
    const double f0 = (xa == kPosInf) ? 1.0 : (xa == kNegInf ? 0.0 : mp.cdf0(xa));
    const double f1 = (xa == kPosInf) ? 1.0 : (xa == kNegInf ? 0.0 : mp.cdf1(xa));
    return (1.0 - eps) * ((1.0 - f1) + a * f0);
}

double solve_decreasing(const std::function<double(double)>& g) {
    // g strictly decreasing with a positive left limit; find g = 0.
    double lo = 1.0, hi = 1.0;
    int guard = 0;
    while (g(hi) > 0.0) {
        hi *= 4.0;
        if (++guard > 256) throw BracketFailure("threshold bracket expansion failed (upper)");
    }
    guard = 0;
    while (g(lo) < 0.0) {
        lo *= 0.25;
        if (++guard > 256) throw BracketFailure("threshold bracket expansion failed (lower)");
    }
    return bisect_root(g, lo, hi, 1e-12);
}

} // namespace

HuberThresholds huber_thresholds(const Distribution& p0, const Distribution& p1, double eps) {
    if (!(eps >= 0) || !(eps < 1))
        throw std::invalid_argument("huber_thresholds: eps must be in [0,1)");
    if (eps == 0.0) return HuberThresholds{0.0, kPosInf, 0.0, 0.0};

    const MonotonePair mp = make_monotone_pair(p0, p1);

    const double b = solve_decreasing([&](double v) { return mass_identity_b(mp, eps, v) - 1.0; });
    // The identity for a is increasing in a; negate to reuse the solver.
    const double a = solve_decreasing([&](double v) { return 1.0 - mass_identity_a(mp, eps, v); });

    if (!(a < b))
        throw DegenerateClasses(
            "no censoring thresholds with a < b: contamination classes overlap (eps too large)");

    HuberThresholds t;
    t.a = a;
    t.b = b;
    t.residual_a = std::fabs(mass_identity_a(mp, eps, a) - 1.0);
    t.residual_b = std::fabs(mass_identity_b(mp, eps, b) - 1.0);
    return t;
}

double huber_degeneracy_limit(const Distribution& p0, const Distribution& p1) {
    const auto nondegenerate = [&](double eps) {
        try {
            huber_thresholds(p0, p1, eps);
            return true;
        } catch (const DegenerateClasses&) {
            return false;
        }
    };
    double lo = 1e-9, hi = 1.0 - 1e-9;
    if (!nondegenerate(lo)) return 0.0;
    if (nondegenerate(hi)) return hi;
    while (hi - lo > 1e-6) {
        const double mid = 0.5 * (lo + hi);
        (nondegenerate(mid) ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// solve_lfd

namespace {

LfdPair lfd_from_pair(Distribution nu0, Distribution nu1) {
    Llr llr = make_llr(nu0, nu1);
    return LfdPair{std::move(nu0), std::move(nu1), std::move(llr)};
}

} // namespace

LfdPair solve_lfd(const UncertaintyClass& P0, const UncertaintyClass& P1) {
    using K = UncertaintyClass::Kind;

    if (P0.kind() == K::singleton && P1.kind() == K::gaussian_mean_band) {
        const Distribution& d0 = P0.nominal();
        if (d0.kind() != Distribution::Kind::gaussian)
            throw UnsupportedClassPair("singleton vs gaussian band requires a gaussian singleton");
        const double m = d0.as_gaussian().mean;
        if (m >= P1.band_lo() && m <= P1.band_hi())
            throw DegenerateClasses("singleton mean lies inside the post-change band");
        const double edge = (m < P1.band_lo()) ? P1.band_lo() : P1.band_hi();
        return lfd_from_pair(d0, Distribution::gaussian(edge, P1.band_sd()));
    }

    if (P0.kind() == K::singleton && P1.kind() == K::exp_rate_ray) {
        const Distribution& d0 = P0.nominal();
        if (d0.kind() != Distribution::Kind::exponential)
            throw UnsupportedClassPair("singleton vs exponential ray requires an exponential singleton");
        if (P1.theta_min() <= d0.as_exponential().rate)
            throw DegenerateClasses("rate ray includes the pre-change rate");
        return lfd_from_pair(d0, Distribution::exponential(P1.theta_min()));
    }

    if (P0.kind() == K::gaussian_mean_band && P1.kind() == K::gaussian_mean_band) {
        if (std::fabs(P0.band_sd() - P1.band_sd()) > 1e-12)
            throw UnsupportedClassPair("gaussian band pair requires equal sds");
        const double sd = P0.band_sd();
        if (P0.band_hi() < P1.band_lo())
            return lfd_from_pair(Distribution::gaussian(P0.band_hi(), sd),
                                 Distribution::gaussian(P1.band_lo(), sd));
        if (P1.band_hi() < P0.band_lo())
            return lfd_from_pair(Distribution::gaussian(P0.band_lo(), sd),
                                 Distribution::gaussian(P1.band_hi(), sd));
        throw DegenerateClasses("gaussian mean bands overlap");
    }

    if (P0.kind() == K::eps_contamination && P1.kind() == K::eps_contamination) {
        if (std::fabs(P0.eps() - P1.eps()) > 0)
            throw UnsupportedClassPair("contamination classes must share the same eps");
        const double eps = P0.eps();
        const Distribution& n0 = P0.nominal();
        const Distribution& n1 = P1.nominal();
        const HuberThresholds t = huber_thresholds(n0, n1, eps);
        Distribution q0 = Distribution::huber_censored0(n0, n1, eps, t.b);
        Distribution q1 = Distribution::huber_censored1(n0, n1, eps, t.a);
        Llr llr = clamp_llr(make_llr(n0, n1), std::log(t.a), std::log(t.b));
        return LfdPair{std::move(q0), std::move(q1), std::move(llr)};
    }

    throw UnsupportedClassPair("unsupported pair: " + P0.describe() + " vs " + P1.describe());
}

// ---------------------------------------------------------------------------
// Stochastic dominance

CdfView CdfView::analytic(Distribution d) {
    CdfView v;
    v.dist_.push_back(std::move(d));
    return v;
}

CdfView CdfView::empirical(std::vector<double> samples) {
    if (samples.size() < 2) throw std::invalid_argument("empirical CdfView needs >= 2 samples");
    CdfView v;
    std::sort(samples.begin(), samples.end());
    v.sorted_ = std::move(samples);
    return v;
}

double CdfView::cdf(double t) const {
    if (!dist_.empty()) return dist_.front().cdf(t);
    const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), t);
    return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
}

double CdfView::quantile(double u) const {
    if (!dist_.empty()) return dist_.front().quantile(u);
    const auto n = static_cast<double>(sorted_.size());
    const auto idx = static_cast<std::size_t>(std::min(n - 1.0, std::max(0.0, std::ceil(u * n) - 1.0)));
    return sorted_[idx];
}

DominanceResult dominates(const CdfView& a, const CdfView& b, double tol) {
    const double lo = std::min(a.quantile(1e-4), b.quantile(1e-4));
    const double hi = std::max(a.quantile(1.0 - 1e-4), b.quantile(1.0 - 1e-4));
    if (!(hi > lo)) {
        const double m = b.cdf(lo) - a.cdf(lo);
        return DominanceResult{m >= -tol, m};
    }

    const int base_n = 1024;
    std::vector<double> ts;
    ts.reserve(2048 + 16);
    for (int i = 0; i <= base_n; ++i)
        ts.push_back(lo + (hi - lo) * static_cast<double>(i) / base_n);

    std::vector<double> gap(ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i) gap[i] = b.cdf(ts[i]) - a.cdf(ts[i]);

    // Refine the intervals whose endpoints carry the smallest gaps.
    std::vector<std::size_t> order(ts.size() - 1);
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        return std::min(gap[x], gap[x + 1]) < std::min(gap[y], gap[y + 1]);
    });

    double margin = *std::min_element(gap.begin(), gap.end());
    const std::size_t refine = std::min<std::size_t>(128, order.size());
    for (std::size_t k = 0; k < refine; ++k) {
        const std::size_t i = order[k];
        for (int j = 1; j <= 8; ++j) {
            const double t = ts[i] + (ts[i + 1] - ts[i]) * static_cast<double>(j) / 9.0;
            margin = std::min(margin, b.cdf(t) - a.cdf(t));
        }
    }
    return DominanceResult{margin >= -tol, margin};
}

// ---------------------------------------------------------------------------
// Joint stochastic boundedness

namespace {

std::vector<double> llr_pushforward(const Llr& llr, const Distribution& d, Seed seed,
                                    std::int64_t n) {
    Rng rng(seed);
    std::vector<double> out(static_cast<std::size_t>(n));
    for (auto& v : out) v = eval(llr, d.sample_one(rng));
    return out;
}

} // namespace

JsbReport check_jsb(const UncertaintyClass& P0, const UncertaintyClass& P1, const LfdPair& lfd,
                    const std::vector<Distribution>& probe_members, const JsbOptions& opt) {
    JsbReport report;
    report.tolerance = opt.tolerance;
    report.pass = true;

    const CdfView base0 = CdfView::empirical(
        llr_pushforward(lfd.llr, lfd.nu0_bar, derive(opt.seed, "jsb|base0"), opt.samples));
    const CdfView base1 = CdfView::empirical(
        llr_pushforward(lfd.llr, lfd.nu1_under, derive(opt.seed, "jsb|base1"), opt.samples));

    for (const Distribution& probe : probe_members) {
        const bool in0 = P0.contains(probe);
        const bool in1 = P1.contains(probe);
        if (!in0 && !in1)
            throw std::invalid_argument("jsb probe belongs to neither class: " + probe.describe());
        const CdfView push = CdfView::empirical(
            llr_pushforward(lfd.llr, probe, derive(opt.seed, "jsb|" + probe.describe()),
                            opt.samples));
        if (in0) {
            const DominanceResult r = dominates(base0, push, opt.tolerance);
            report.margins.push_back({probe.describe(), true, r.margin, r.dominates});
            report.pass = report.pass && r.dominates;
        }
        if (in1) {
            const DominanceResult r = dominates(push, base1, opt.tolerance);
            report.margins.push_back({probe.describe(), false, r.margin, r.dominates});
            report.pass = report.pass && r.dominates;
        }
    }
    return report;
}

std::vector<Distribution> default_probes(const UncertaintyClass& cls,
                                         const std::vector<double>& contaminant_sds) {
    using K = UncertaintyClass::Kind;
    std::vector<Distribution> out;
    switch (cls.kind()) {
    case K::singleton:
        out.push_back(cls.nominal());
        break;
    case K::gaussian_mean_band: {
        const int grid = 5;
        for (int i = 0; i <= grid; ++i) {
            const double m =
                cls.band_lo() + (cls.band_hi() - cls.band_lo()) * static_cast<double>(i) / grid;
            out.push_back(Distribution::gaussian(m, cls.band_sd()));
        }
        break;
    }
    case K::exp_rate_ray:
        for (double f : {1.0, 1.5, 2.0, 4.0, 8.0})
            out.push_back(Distribution::exponential(cls.theta_min() * f));
        break;
    case K::eps_contamination: {
        const Distribution& nom = cls.nominal();
        out.push_back(nom);
        if (cls.eps() > 0 && nom.kind() == Distribution::Kind::gaussian) {
            const double center = nom.as_gaussian().mean;
            for (double sd : contaminant_sds)
                out.push_back(Distribution::mixture(
                    {1.0 - cls.eps(), cls.eps()},
                    {nom, Distribution::gaussian(center, sd)}));
        }
        break;
    }
    }
    return out;
}

} // namespace qcd
