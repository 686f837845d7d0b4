#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace aberrant_mix {

/// Invalid shapes, out-of-range options, malformed inputs.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A covariance (or other matrix) failed its Cholesky factorization.
/// `minor` is the 1-based order of the first non-positive leading minor.
class NotPositiveDefinite : public std::runtime_error {
public:
    NotPositiveDefinite(const std::string& what, int minor)
        : std::runtime_error(what + " (leading minor " + std::to_string(minor) + " not positive)"),
          minor_(minor) {}
    int minor() const noexcept { return minor_; }

private:
    int minor_;
};

/// A mixture component received (numerically) zero total responsibility.
class EmptyComponent : public std::runtime_error {
public:
    EmptyComponent(const std::string& component, double weight)
        : std::runtime_error("empty component: " + component + " (total weight " +
                             std::to_string(weight) + ")"),
          component_(component) {}
    const std::string& component() const noexcept { return component_; }

private:
    std::string component_;
};

/// Normal equations for one item's loadings could not be solved.
class SingularSystem : public std::runtime_error {
public:
    SingularSystem(const std::string& what, int item)
        : std::runtime_error(what + " (item " + std::to_string(item) + ")"), item_(item) {}
    int item() const noexcept { return item_; }

private:
    int item_;
};

/// A fit that could not produce an estimate: every EM start failed, or too
/// many bootstrap replicates were dropped. Carries the individual causes.
class FitFailure : public std::runtime_error {
public:
    explicit FitFailure(std::vector<std::string> start_causes)
        : std::runtime_error(join_starts(start_causes)), causes_(std::move(start_causes)) {}
    FitFailure(const std::string& headline, std::vector<std::string> causes)
        : std::runtime_error(join(headline, causes)), causes_(std::move(causes)) {}
    const std::vector<std::string>& causes() const noexcept { return causes_; }

private:
    static std::string join_starts(const std::vector<std::string>& causes) {
        std::string out = "all EM starts failed";
        for (std::size_t i = 0; i < causes.size(); ++i) {
            out += "; start " + std::to_string(i) + ": " + causes[i];
        }
        return out;
    }
    static std::string join(const std::string& headline, const std::vector<std::string>& causes) {
        std::string out = headline;
        for (const auto& cause : causes) {
            out += "; " + cause;
        }
        return out;
    }
    std::vector<std::string> causes_;
};

/// File-system and parse problems, always carrying the offending path.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace aberrant_mix
