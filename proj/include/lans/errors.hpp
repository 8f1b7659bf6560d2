#pragma once

#include <stdexcept>
#include <string>

namespace lans {

/// Raised when an operator without an inverse is asked to invert (Q^{-1} with sigma = 0).
class SingularOperatorError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A requested experiment violates a mathematical precondition (e.g. the
/// exponential-moment sign condition). Carries the human-readable condition.
class PreconditionError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Non-finite state detected during time stepping.
class BlowUpError : public std::runtime_error {
public:
    BlowUpError(double time, const std::string& what)
        : std::runtime_error(what), time_(time) {}
    double time() const noexcept { return time_; }

private:
    double time_;
};

} // namespace lans
