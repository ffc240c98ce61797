#pragma once
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qcd/detectors.hpp"
#include "qcd/distribution.hpp"
#include "qcd/errors.hpp"
#include "qcd/uncertainty.hpp"

namespace qcd {

// Flat "[section] key = value" config text. Keys are stored as
// "section.key"; lines starting with '#' or ';' are comments.
class ConfigMap {
public:
    static ConfigMap parse_file(const std::string& path);
    static ConfigMap parse_text(const std::string& text);

    bool has(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    std::string require_string(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    std::vector<double> get_double_list(const std::string& key,
                                        const std::vector<double>& fallback) const;
    std::vector<std::int64_t> get_int_list(const std::string& key,
                                           const std::vector<std::int64_t>& fallback) const;

    void set(const std::string& key, const std::string& value);
    const std::map<std::string, std::string>& entries() const { return kv_; }

private:
    std::map<std::string, std::string> kv_;
};

// Distribution expressions:
//   gaussian(mean, sd) | exponential(rate) | mixture(w:expr, w:expr, ...)
Distribution parse_distribution(const std::string& text);

// Class expressions:
//   singleton(expr) | gaussian_band(lo, hi, sd) | exp_ray(theta_min)
//   | eps_contamination(expr, eps)
UncertaintyClass parse_class(const std::string& text);

DetectorFamily parse_family(const std::string& name);

// Detector block under the given section prefix: keys type, eta, rho, r,
// window, theta_lo, theta_hi.
DetectorSpec parse_detector_spec(const ConfigMap& cfg, const std::string& section);

} // namespace qcd
