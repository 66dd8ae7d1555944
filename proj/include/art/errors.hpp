#pragma once

#include <stdexcept>
#include <string>

namespace art {

// Base class for all toolkit errors. The CLI catches these and reports the
// message as a one-line diagnostic with a nonzero exit status.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor rank or dimension mismatch.
struct ShapeError : Error { using Error::Error; };
// Near-zero vectors, coincident point sets, unusable 6D representations.
struct DegenerateError : Error { using Error::Error; };
struct EmptyInputError : Error { using Error::Error; };
struct ParseError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
// Non-finite losses or gradients during training.
struct DivergenceError : Error { using Error::Error; };
struct InsufficientDataError : Error { using Error::Error; };

} // namespace art
