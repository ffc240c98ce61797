#pragma once
#include <stdexcept>
#include <string>

namespace qcd {

// Thrown when an epsilon-contamination pair has no censoring thresholds
// with a < b, i.e. the two classes overlap.
struct DegenerateClasses : std::runtime_error {
    explicit DegenerateClasses(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when the nominal likelihood ratio fails the monotonicity check
// required by the censored-LFD construction.
struct NonMonotoneLR : std::runtime_error {
    explicit NonMonotoneLR(const std::string& what) : std::runtime_error(what) {}
};

struct UnsupportedClassPair : std::runtime_error {
    explicit UnsupportedClassPair(const std::string& what) : std::runtime_error(what) {}
};

// Threshold search could not straddle the calibration target.
struct BracketFailure : std::runtime_error {
    explicit BracketFailure(const std::string& what) : std::runtime_error(what) {}
};

// Post-change law carries no information against the detector pair
// (nonpositive mean log-likelihood-ratio drift).
struct NonInformative : std::runtime_error {
    explicit NonInformative(const std::string& what) : std::runtime_error(what) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace qcd
