#pragma once

#include <stdexcept>
#include <string>

namespace chs {

/// Bad argument or domain violation (e.g. evaluating the potential outside (0,1)).
class InvalidArgument : public std::invalid_argument {
public:
    explicit InvalidArgument(const std::string& msg) : std::invalid_argument(msg) {}
};

/// Iterative solver did not reach its tolerance.
class SolverFailure : public std::runtime_error {
public:
    SolverFailure(const std::string& msg, int iterations, double residual)
        : std::runtime_error(msg + " (iterations=" + std::to_string(iterations) +
                             ", residual=" + std::to_string(residual) + ")"),
          iterations(iterations),
          residual(residual) {}

    int iterations;
    double residual;
};

/// A structural invariant of the scheme was violated (positivity, barrier, bounds).
class InvariantViolation : public std::runtime_error {
public:
    explicit InvariantViolation(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace chs
