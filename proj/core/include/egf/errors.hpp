#pragma once

#include <stdexcept>
#include <string>

namespace egf {

/// Raised when caller-supplied data violates a precondition (bad dimension,
/// out-of-range parameter, malformed file).
struct InputError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Raised when an operation has no implementation for the requested variant.
struct UnsupportedError : std::logic_error {
    using std::logic_error::logic_error;
};

/// Raised when a numerical routine cannot produce a trustworthy result
/// (singular system, diverging descent).
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace egf
