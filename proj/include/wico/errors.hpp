#pragma once

#include <stdexcept>
#include <string>

namespace wico {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shape or extent mismatch between operands.
struct DimError : Error {
    using Error::Error;
};

// Argument outside its allowed range.
struct RangeError : Error {
    using Error::Error;
};

// Gradient checking requested on a non-float64 graph.
struct PrecisionError : Error {
    using Error::Error;
};

// Training loss became NaN; carries the offending step.
struct DivergenceError : Error {
    DivergenceError(const std::string& msg, std::size_t step)
        : Error(msg), step(step) {}
    std::size_t step;
};

// Non-finite or otherwise unusable input data.
struct InputError : Error {
    using Error::Error;
};

// Malformed or inconsistent configuration.
struct ConfigError : Error {
    using Error::Error;
};

// File read/write failure.
struct IoError : Error {
    using Error::Error;
};

}  // namespace wico
