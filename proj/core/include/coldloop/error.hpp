#pragma once

#include <stdexcept>
#include <string>

namespace coldloop {

// Bad input: a value outside its documented domain. Maps to CLI exit code 1.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// An operation was handed a stimulus of a kind it does not support.
class WrongKindError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class StepSizeError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// Regression with fewer than two distinct duty values.
class DegenerateDesignError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// A target rate lies outside what a duty model can deliver inside its duty
// range. Carries the feasible interval so callers can report it.
class UnreachableRateError : public std::runtime_error {
public:
    UnreachableRateError(const std::string& what, double target, double lo, double hi)
        : std::runtime_error(what), target_(target), lo_(lo), hi_(hi) {}

    double target() const noexcept { return target_; }
    double feasible_min() const noexcept { return lo_; }
    double feasible_max() const noexcept { return hi_; }

private:
    double target_;
    double lo_;
    double hi_;
};

// Drift-correction loop did not settle within its iteration budget.
class CalibrationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace coldloop
