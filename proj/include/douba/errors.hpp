#pragma once

#include <stdexcept>
#include <string>

namespace douba {

// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Mismatched supports, atoms off their grid, incompatible domains.
struct DomainMismatchError : Error {
    using Error::Error;
};

// Bad caller-supplied values (negative weights, empty marginal list, ...).
struct InvalidInputError : Error {
    using Error::Error;
};

// Non-finite intermediate values or overflow inside a solver.
struct NumericalError : Error {
    using Error::Error;
};

// Dual ascent observed an objective decrease for a caller-forced step size.
struct StepSizeError : Error {
    using Error::Error;
};

// Redundant computations that must agree within tolerance did not.
struct ConsistencyError : Error {
    using Error::Error;
};

}  // namespace douba
