#pragma once

#include <stdexcept>
#include <string>

namespace noma {

/// Raised when an argument violates an operation's precondition.
class InvalidParameter : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A covariance matrix that is not positive definite reached a density evaluation.
class DegenerateCovariance : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Too few samples to fit the requested number of mixture components.
class InsufficientData : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A cluster centroid sits at the origin, so its phase is undefined.
class DegenerateCentroid : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Exhaustive search would exceed the hypothesis budget.
class CapacityExceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed experiment configuration. `line()` is 0 when the problem is not
/// tied to a specific line (e.g. a missing key).
class ConfigError : public std::runtime_error {
public:
    ConfigError(int line, const std::string& message)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + message : message),
          line_(line) {}

    int line() const noexcept { return line_; }

private:
    int line_;
};

}  // namespace noma
