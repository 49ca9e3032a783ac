#pragma once

#include <stdexcept>
#include <string>

namespace bellman_sharp {

/// Point outside the admissible domain, or parameters outside their
/// validity window.
struct DomainError : std::runtime_error {
    explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

/// Operation called on the wrong branch region.
struct RegionError : std::runtime_error {
    explicit RegionError(const std::string& what) : std::runtime_error(what) {}
};

/// Scalar solve exceeded its bracket-expansion or iteration budget.
struct ConvergenceError : std::runtime_error {
    explicit ConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

/// Test pair violates the means hypothesis of the main inequality.
struct HypothesisError : std::runtime_error {
    explicit HypothesisError(const std::string& what) : std::runtime_error(what) {}
};

/// Mismatched tree/leaf/coefficient shapes.
struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

/// Non-finite or malformed grid data.
struct GridError : std::runtime_error {
    explicit GridError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace bellman_sharp
