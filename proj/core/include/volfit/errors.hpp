#pragma once

#include <stdexcept>
#include <string>

namespace volfit {

/// Bad arguments, malformed files, inconsistent configuration.
struct InvalidInput : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Option price outside the attainable no-arbitrage range.
struct PriceOutOfBounds : std::domain_error {
    using std::domain_error::domain_error;
};

/// Iterative routine exhausted its budget without meeting tolerance.
struct NoConvergence : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Non-finite or otherwise unusable intermediate value.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Checkpoint incompatible with the requested configuration.
struct CheckpointMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Structured text (CSV/JSON) that does not match the documented schema.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace volfit
