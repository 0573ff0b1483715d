#pragma once

#include <stdexcept>
#include <string>

namespace tokensys {

// Bad user input: malformed config, out-of-range parameter. CLI exit code 1.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Caller broke an operation's precondition (e.g. empty availability set).
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// A model invariant failed at runtime. Always an implementation bug. CLI exit code 2.
class InvariantViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// The requested computation exceeds a hard feasibility guard.
class InfeasibleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// An iterative numerical method did not reach its tolerance.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double residual)
        : std::runtime_error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_;
};

}  // namespace tokensys
