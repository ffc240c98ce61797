#include "qcd/detectors.hpp"

#include <cstdio>

namespace qcd {

std::string family_name(DetectorFamily f) {
    switch (f) {
    case DetectorFamily::cusum: return "cusum";
    case DetectorFamily::shiryaev: return "shiryaev";
    case DetectorFamily::sr: return "sr";
    case DetectorFamily::glr: return "glr";
    }
    return "?";
}

std::string describe(const DetectorSpec& spec) {
    char buf[256];
    switch (spec.family) {
    case DetectorFamily::cusum:
        std::snprintf(buf, sizeof(buf), "cusum(eta=%.17g)", spec.eta);
        return buf;
    case DetectorFamily::shiryaev:
        std::snprintf(buf, sizeof(buf), "shiryaev(eta=%.17g,rho=%.17g)", spec.eta, spec.rho);
        return buf;
    case DetectorFamily::sr:
        std::snprintf(buf, sizeof(buf), "sr(eta=%.17g,r=%.17g%s)", spec.eta, spec.sr_init,
                      spec.sr_psi ? (",psi=" + spec.sr_psi->describe()).c_str() : "");
        return buf;
    case DetectorFamily::glr:
        std::snprintf(buf, sizeof(buf), "glr(eta=%.17g,window=%lld,theta=[%.17g,%.17g])",
                      spec.eta, static_cast<long long>(spec.window), spec.theta_lo,
                      spec.theta_hi);
        return buf;
    }
    return "?";
}

std::string describe(const DetectorModel& model) {
    if (model.spec.family == DetectorFamily::glr) return describe(model.spec);
    return describe(model.spec) + "|" + describe(model.llr);
}

ObsDetector::ObsDetector(DetectorModel model) : model_(std::move(model)), state_(CusumState{}) {
    init(nullptr, /*allow_skipped_psi_draw=*/true);
}

void ObsDetector::reset(Rng* rng) { init(rng, false); }

void ObsDetector::init(Rng* rng, bool allow_skipped_psi_draw) {
    const DetectorSpec& s = model_.spec;
    switch (s.family) {
    case DetectorFamily::cusum:
        state_ = CusumState{0.0, s.eta, 0};
        break;
    case DetectorFamily::shiryaev:
        state_ = ShiryaevState{kNegInf, s.rho, s.eta, 0};
        break;
    case DetectorFamily::sr: {
        double r0 = s.sr_init;
        if (s.sr_psi) {
            if (rng) {
                r0 = s.sr_psi->sample_one(*rng);
                if (r0 < 0.0)
                    throw std::invalid_argument("SR start law produced a negative value");
            } else if (!allow_skipped_psi_draw) {
                throw std::logic_error("SR randomized start requires an rng at reset");
            }
        }
        state_ = SrState{r0, s.eta, 0};
        break;
    }
    case DetectorFamily::glr:
        state_ = GlrState(s.theta_lo, s.theta_hi, s.eta, s.window);
        break;
    }
}

double ObsDetector::statistic() const {
    return std::visit([](const auto& st) { return st.statistic(); }, state_);
}

} // namespace qcd
