#pragma once

#include <stdexcept>
#include <string>

namespace bellman {

/// Thrown when a coefficient evaluator produces a non-finite value.
/// The message carries the offending control index and (t, x) location.
class EvaluationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Thrown when an iterative solve exhausts its iteration budget.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double last_residual)
        : std::runtime_error(what), last_residual_(last_residual) {}

    double last_residual() const { return last_residual_; }

private:
    double last_residual_;
};

}  // namespace bellman
