#include "qcd/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace qcd {
namespace detail {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

class DistImpl {
public:
    virtual ~DistImpl() = default;
    virtual Distribution::Kind kind() const = 0;
    virtual double log_density(double x) const = 0;
    virtual double cdf(double x) const = 0;
    virtual double quantile(double u) const = 0;
    virtual double sample_one(Rng& rng) const = 0;
    virtual Interval support() const = 0;
    virtual Interval quantile_range(double tail) const = 0;
    virtual std::string make_describe() const = 0;

    const std::string& describe() const { return describe_; }
    void finish() { describe_ = make_describe(); }

private:
    std::string describe_;
};

namespace {

class GaussianImpl final : public DistImpl {
public:
    GaussianImpl(double mean, double sd) : mean_(mean), sd_(sd) {
        if (!(sd > 0.0) || !std::isfinite(mean) || !std::isfinite(sd))
            throw std::invalid_argument("gaussian: requires finite mean and sd > 0");
    }
    Distribution::Kind kind() const override { return Distribution::Kind::gaussian; }
    double log_density(double x) const override {
        const double z = (x - mean_) / sd_;
        return -0.5 * (kLogTwoPi + z * z) - std::log(sd_);
    }
    double cdf(double x) const override { return normal_cdf((x - mean_) / sd_); }
    double quantile(double u) const override { return mean_ + sd_ * normal_quantile(u); }
    double sample_one(Rng& rng) const override { return quantile(rng.uniform_open()); }
    Interval support() const override { return {kNegInf, kPosInf}; }
    Interval quantile_range(double tail) const override {
        const double z = -normal_quantile(tail);
        return {mean_ - sd_ * z, mean_ + sd_ * z};
    }
    std::string make_describe() const override {
        return "gaussian(" + fmt(mean_) + "," + fmt(sd_) + ")";
    }
    double mean_, sd_;
};

class ExponentialImpl final : public DistImpl {
public:
    explicit ExponentialImpl(double rate) : rate_(rate) {
        if (!(rate > 0.0) || !std::isfinite(rate))
            throw std::invalid_argument("exponential: requires rate > 0");
    }
    Distribution::Kind kind() const override { return Distribution::Kind::exponential; }
    double log_density(double x) const override {
        if (x < 0.0) return kNegInf;
        return std::log(rate_) - rate_ * x;
    }
    double cdf(double x) const override {
        if (x <= 0.0) return 0.0;
        return -std::expm1(-rate_ * x);
    }
    double quantile(double u) const override { return -std::log1p(-u) / rate_; }
    double sample_one(Rng& rng) const override { return quantile(rng.uniform_open()); }
    Interval support() const override { return {0.0, kPosInf}; }
    Interval quantile_range(double tail) const override {
        return {0.0, quantile(1.0 - tail)};
    }
    std::string make_describe() const override { return "exponential(" + fmt(rate_) + ")"; }
    double rate_;
};

class MixtureImpl final : public DistImpl {
public:
    MixtureImpl(std::vector<double> w, std::vector<Distribution> comps)
        : weights_(std::move(w)), comps_(std::move(comps)) {
        if (weights_.empty() || weights_.size() != comps_.size())
            throw std::invalid_argument("mixture: weights/components size mismatch");
        double sum = 0.0;
        for (double wi : weights_) {
            if (!(wi >= 0.0)) throw std::invalid_argument("mixture: negative weight");
            sum += wi;
        }
        if (std::fabs(sum - 1.0) > 1e-12)
            throw std::invalid_argument("mixture: weights must sum to 1 (tol 1e-12)");
        cum_.resize(weights_.size());
        double acc = 0.0;
        for (std::size_t i = 0; i < weights_.size(); ++i) {
            acc += weights_[i];
            cum_[i] = acc;
        }
        cum_.back() = 1.0;
    }
    Distribution::Kind kind() const override { return Distribution::Kind::mixture; }
    double log_density(double x) const override {
        double acc = kNegInf;
        for (std::size_t i = 0; i < comps_.size(); ++i) {
            if (weights_[i] <= 0.0) continue;
            acc = log_sum_exp(acc, std::log(weights_[i]) + comps_[i].log_density(x));
        }
        return acc;
    }
    double cdf(double x) const override {
        double acc = 0.0;
        for (std::size_t i = 0; i < comps_.size(); ++i) acc += weights_[i] * comps_[i].cdf(x);
        return acc;
    }
    double quantile(double u) const override {
        double lo = kPosInf, hi = kNegInf;
        for (std::size_t i = 0; i < comps_.size(); ++i) {
            if (weights_[i] <= 0.0) continue;
            lo = std::min(lo, comps_[i].quantile(u));
            hi = std::max(hi, comps_[i].quantile(u));
        }
        if (!(lo < hi)) return lo;
        return bisect_root([&](double x) { return cdf(x) - u; }, lo, hi,
                           1e-13 * std::max(1.0, std::fabs(lo) + std::fabs(hi)));
    }
    double sample_one(Rng& rng) const override {
        const double u = rng.uniform_open();
        std::size_t i = 0;
        while (i + 1 < cum_.size() && u > cum_[i]) ++i;
        return comps_[i].sample_one(rng);
    }
    Interval support() const override {
        Interval iv{kPosInf, kNegInf};
        for (std::size_t i = 0; i < comps_.size(); ++i) {
            if (weights_[i] <= 0.0) continue;
            const Interval c = comps_[i].support();
            iv.lo = std::min(iv.lo, c.lo);
            iv.hi = std::max(iv.hi, c.hi);
        }
        return iv;
    }
    Interval quantile_range(double tail) const override {
        Interval iv{kPosInf, kNegInf};
        for (std::size_t i = 0; i < comps_.size(); ++i) {
            if (weights_[i] <= 0.0) continue;
            const Interval c = comps_[i].quantile_range(tail);
            iv.lo = std::min(iv.lo, c.lo);
            iv.hi = std::max(iv.hi, c.hi);
        }
        return iv;
    }
    std::string make_describe() const override {
        std::string s = "mixture(";
        for (std::size_t i = 0; i < comps_.size(); ++i) {
            if (i) s += ",";
            s += fmt(weights_[i]) + ":" + comps_[i].describe();
        }
        return s + ")";
    }
    std::vector<double> weights_;
    std::vector<Distribution> comps_;
    std::vector<double> cum_;
};

// Shared machinery for the two censored least-favorable laws. In both cases
// the density is piecewise proportional to p0 below a censoring point in x
// (where log p1 - log p0 crosses the threshold) and to p1 above it.
class HuberImpl : public DistImpl {
public:
    HuberImpl(Distribution p0, Distribution p1, double eps, double thresh, bool upper_censor)
        : p0_(std::move(p0)), p1_(std::move(p1)), eps_(eps), thresh_(thresh) {
        if (!(eps >= 0.0) || !(eps < 1.0))
            throw std::invalid_argument("huber_censored: eps must be in [0,1)");
        if (upper_censor ? !(thresh > 0.0) : !(thresh >= 0.0))
            throw std::invalid_argument("huber_censored: bad censoring threshold");
        log_thresh_ = std::log(thresh);
        log1meps_ = std::log1p(-eps);
        censor_x_ = solve_censor_point();
        f0c_ = p0_.cdf(censor_x_);
        f1c_ = p1_.cdf(censor_x_);
    }

    double llr_nominal(double x) const { return p1_.log_density(x) - p0_.log_density(x); }

    Interval support() const override {
        const Interval a = p0_.support();
        const Interval b = p1_.support();
        return {std::min(a.lo, b.lo), std::max(a.hi, b.hi)};
    }

    Interval quantile_range(double tail) const override {
        return {quantile(tail), quantile(1.0 - tail)};
    }

    double sample_one(Rng& rng) const override {
        if (table_u_.empty())
            throw std::logic_error("huber_censored: sampling table not initialized");
        const double u = rng.uniform_open();
        if (u <= table_u_.front() || u >= table_u_.back()) return quantile(u);
        const auto it = std::upper_bound(table_u_.begin(), table_u_.end(), u);
        const std::size_t j = static_cast<std::size_t>(it - table_u_.begin());
        const double u0 = table_u_[j - 1], u1 = table_u_[j];
        const double x0 = table_x_[j - 1], x1 = table_x_[j];
        const double w = (u - u0) / (u1 - u0);
        return x0 + w * (x1 - x0);
    }

protected:
    // Inverse-CDF table: mostly uniform in probability, refined around the
    // censoring point where the density (and so the quantile slope) jumps.
    void build_table() {
        const double tail = 1e-7;
        const int base_knots = 4096;
        std::vector<double> us;
        us.reserve(base_knots + 300);
        for (int i = 0; i < base_knots; ++i) {
            const double t = static_cast<double>(i) / (base_knots - 1);
            us.push_back(tail + t * (1.0 - 2.0 * tail));
        }
        const double uc = cdf(censor_x_);
        if (uc > tail && uc < 1.0 - tail) {
            for (int k = -128; k <= 128; ++k) {
                const double u = uc + k * 4e-7;
                if (u > tail && u < 1.0 - tail) us.push_back(u);
            }
        }
        std::sort(us.begin(), us.end());
        us.erase(std::unique(us.begin(), us.end()), us.end());
        table_u_ = std::move(us);
        table_x_.resize(table_u_.size());
        for (std::size_t i = 0; i < table_u_.size(); ++i) table_x_[i] = quantile(table_u_[i]);
    }

    double solve_censor_point() const {
        if (log_thresh_ == kPosInf) return kPosInf;
        if (log_thresh_ == kNegInf) return kNegInf;
        const Interval r0 = p0_.quantile_range(1e-14);
        const Interval r1 = p1_.quantile_range(1e-14);
        const double lo = std::min(r0.lo, r1.lo);
        const double hi = std::max(r0.hi, r1.hi);
        const auto g = [this](double x) { return llr_nominal(x) - log_thresh_; };
        if (g(hi) <= 0.0) return kPosInf;
        if (g(lo) >= 0.0) return kNegInf;
        return bisect_root(g, lo, hi, 1e-13 * std::max(1.0, std::fabs(lo) + std::fabs(hi)));
    }

    void check_mass(double mass) const {
        if (std::fabs(mass - 1.0) > 1e-8)
            throw std::invalid_argument(
                "huber_censored: density does not integrate to 1 (threshold inconsistent "
                "with eps); total mass = " + fmt(mass));
    }

    Distribution p0_, p1_;
    double eps_, thresh_, log_thresh_, log1meps_;
    double censor_x_ = 0.0, f0c_ = 0.0, f1c_ = 0.0;
    std::vector<double> table_u_, table_x_;
};

// Least favorable pre-change law: nominal p0 kept where L <= b, upper tail
// replaced by p1/b.
class HuberCensored0Impl final : public HuberImpl {
public:
    HuberCensored0Impl(Distribution p0, Distribution p1, double eps, double b)
        : HuberImpl(std::move(p0), std::move(p1), eps, b, /*upper_censor=*/true) {
        const double omeps = 1.0 - eps_;
        check_mass(omeps * f0c_ + omeps / thresh_ * (1.0 - f1c_));
        build_table();
    }
    Distribution::Kind kind() const override { return Distribution::Kind::huber_censored0; }
    double log_density(double x) const override {
        const double l0 = p0_.log_density(x);
        const double l1 = p1_.log_density(x);
        if (l1 - l0 <= log_thresh_ || (l0 == kNegInf && l1 == kNegInf))
            return log1meps_ + l0;
        return log1meps_ - log_thresh_ + l1;
    }
    double cdf(double x) const override {
        const double omeps = 1.0 - eps_;
        if (x <= censor_x_) return omeps * p0_.cdf(x);
        double v = omeps * f0c_;
        if (log_thresh_ != kPosInf) v += omeps / thresh_ * (p1_.cdf(x) - f1c_);
        return std::min(v, 1.0);
    }
    double quantile(double u) const override {
        const double omeps = 1.0 - eps_;
        const double ub = omeps * f0c_;
        if (u <= ub || log_thresh_ == kPosInf) return p0_.quantile(std::min(u / omeps, 1.0));
        return p1_.quantile(std::min(f1c_ + (u - ub) * thresh_ / omeps, 1.0));
    }
    std::string make_describe() const override {
        return "huber0(" + p0_.describe() + "," + p1_.describe() + ",eps=" + fmt(eps_) +
               ",b=" + fmt(thresh_) + ")";
    }
};

// Least favorable post-change law: nominal p1 kept where L > a, lower tail
// replaced by a*p0.
class HuberCensored1Impl final : public HuberImpl {
public:
    HuberCensored1Impl(Distribution p0, Distribution p1, double eps, double a)
        : HuberImpl(std::move(p0), std::move(p1), eps, a, /*upper_censor=*/false) {
        const double omeps = 1.0 - eps_;
        check_mass(thresh_ * omeps * f0c_ + omeps * (1.0 - f1c_));
        build_table();
    }
    Distribution::Kind kind() const override { return Distribution::Kind::huber_censored1; }
    double log_density(double x) const override {
        const double l0 = p0_.log_density(x);
        const double l1 = p1_.log_density(x);
        if (l1 - l0 <= log_thresh_)
            return log1meps_ + log_thresh_ + l0;
        return log1meps_ + l1;
    }
    double cdf(double x) const override {
        const double omeps = 1.0 - eps_;
        if (x <= censor_x_) return thresh_ * omeps * p0_.cdf(x);
        const double v = thresh_ * omeps * f0c_ + omeps * (p1_.cdf(x) - f1c_);
        return std::min(v, 1.0);
    }
    double quantile(double u) const override {
        const double omeps = 1.0 - eps_;
        const double ua = thresh_ * omeps * f0c_;
        if (u <= ua && thresh_ > 0.0) return p0_.quantile(std::min(u / (thresh_ * omeps), 1.0));
        return p1_.quantile(std::min(f1c_ + (u - ua) / omeps, 1.0));
    }
    std::string make_describe() const override {
        return "huber1(" + p0_.describe() + "," + p1_.describe() + ",eps=" + fmt(eps_) +
               ",a=" + fmt(thresh_) + ")";
    }
};

template <typename T, typename... Args>
std::shared_ptr<const DistImpl> make_impl(Args&&... args) {
    auto p = std::make_shared<T>(std::forward<Args>(args)...);
    p->finish();
    return p;
}

} // namespace
} // namespace detail

Distribution::Distribution(std::shared_ptr<const detail::DistImpl> impl)
    : impl_(std::move(impl)) {}

Distribution Distribution::gaussian(double mean, double sd) {
    return Distribution(detail::make_impl<detail::GaussianImpl>(mean, sd));
}
Distribution Distribution::exponential(double rate) {
    return Distribution(detail::make_impl<detail::ExponentialImpl>(rate));
}
Distribution Distribution::mixture(std::vector<double> weights,
                                   std::vector<Distribution> components) {
    return Distribution(
        detail::make_impl<detail::MixtureImpl>(std::move(weights), std::move(components)));
}
Distribution Distribution::huber_censored0(const Distribution& p0, const Distribution& p1,
                                           double eps, double b) {
    return Distribution(detail::make_impl<detail::HuberCensored0Impl>(p0, p1, eps, b));
}
Distribution Distribution::huber_censored1(const Distribution& p0, const Distribution& p1,
                                           double eps, double a) {
    return Distribution(detail::make_impl<detail::HuberCensored1Impl>(p0, p1, eps, a));
}

Distribution::Kind Distribution::kind() const { return impl_->kind(); }
double Distribution::log_density(double x) const { return impl_->log_density(x); }
double Distribution::cdf(double x) const {
    if (x == kPosInf) return 1.0;
    if (x == kNegInf) return 0.0;
    return std::clamp(impl_->cdf(x), 0.0, 1.0);
}
double Distribution::quantile(double u) const {
    if (!(u >= 0.0) || !(u <= 1.0)) throw std::domain_error("quantile: u outside [0,1]");
    return impl_->quantile(u);
}
double Distribution::sample_one(Rng& rng) const { return impl_->sample_one(rng); }

std::vector<double> Distribution::sample(const Seed& seed, std::size_t n) const {
    Rng rng(seed);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = impl_->sample_one(rng);
    return out;
}

Interval Distribution::support() const { return impl_->support(); }
Interval Distribution::quantile_range(double tail) const { return impl_->quantile_range(tail); }
const std::string& Distribution::describe() const { return impl_->describe(); }

Distribution::GaussianParams Distribution::as_gaussian() const {
    const auto* g = dynamic_cast<const detail::GaussianImpl*>(impl_.get());
    if (!g) throw std::logic_error("as_gaussian: not a gaussian");
    return {g->mean_, g->sd_};
}
Distribution::ExponentialParams Distribution::as_exponential() const {
    const auto* e = dynamic_cast<const detail::ExponentialImpl*>(impl_.get());
    if (!e) throw std::logic_error("as_exponential: not an exponential");
    return {e->rate_};
}

double kl_divergence(const Distribution& p, const Distribution& q) {
    using Kind = Distribution::Kind;
    if (p.kind() == Kind::gaussian && q.kind() == Kind::gaussian) {
        const auto a = p.as_gaussian();
        const auto b = q.as_gaussian();
        const double dm = a.mean - b.mean;
        return std::log(b.sd / a.sd) + (a.sd * a.sd + dm * dm) / (2.0 * b.sd * b.sd) - 0.5;
    }
    if (p.kind() == Kind::exponential && q.kind() == Kind::exponential) {
        const double lp = p.as_exponential().rate;
        const double lq = q.as_exponential().rate;
        return std::log(lp / lq) + lq / lp - 1.0;
    }
    const Interval sp = p.support();
    const Interval sq = q.support();
    if (sp.lo < sq.lo - 1e-12 || sp.hi > sq.hi + 1e-12) return kPosInf;

    const Interval r = p.quantile_range(1e-14);
    const double value = integrate(
        [&](double x) {
            const double lp = p.log_density(x);
            if (lp == kNegInf) return 0.0;
            const double lq = q.log_density(x);
            return std::exp(lp) * (lp - lq);
        },
        r.lo, r.hi, 1e-8);
    return (value < 0.0 && value > -1e-7) ? 0.0 : value;
}

} // namespace qcd
