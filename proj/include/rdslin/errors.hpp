#pragma once

#include <stdexcept>
#include <string>

namespace rdslin {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed configuration or invalid call arguments.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Access outside the finite orbit window. Never silently clamped.
class TruncationError : public Error {
public:
    using Error::Error;
};

/// A standing hypothesis of the linearization theory fails on the data.
class HypothesisViolation : public Error {
public:
    HypothesisViolation(std::string hypothesis, const std::string& detail)
        : Error(hypothesis + ": " + detail), hypothesis_(std::move(hypothesis)) {}

    [[nodiscard]] const std::string& hypothesis() const noexcept { return hypothesis_; }

private:
    std::string hypothesis_;
};

/// An iteration failed to reach its tolerance within its budget.
class ConvergenceFailure : public Error {
public:
    using Error::Error;
};

/// Hypothesis names used in reports and error messages.
namespace hyp {
inline constexpr const char* splitting = "splitting";
inline constexpr const char* invariance = "projection-invariance";
inline constexpr const char* block_invertibility = "block-invertibility";
inline constexpr const char* dichotomy = "dichotomy";
inline constexpr const char* growth = "growth-bound";
inline constexpr const char* boundedness = "boundedness";
inline constexpr const char* lipschitz = "lipschitz-budget";
inline constexpr const char* range = "range-condition";
inline constexpr const char* map_invertibility = "perturbed-map-invertibility";
inline constexpr const char* smallness = "smallness";
inline constexpr const char* holder_budget = "holder-budget";
inline constexpr const char* tower_threshold = "tower-threshold";
}  // namespace hyp

}  // namespace rdslin
