#pragma once

#include <stdexcept>
#include <string>

namespace fognet {

// Thrown when tensor/matrix shapes are incompatible. Messages name both shapes.
struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Thrown on degenerate numeric input (zero-norm rows, empty logits, ...).
struct DegenerateInputError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Thrown on invalid parameter values (negative fog coefficient, bad amplitude, ...).
struct ParameterError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Thrown when a numeric evaluation produces non-finite results.
struct EvaluationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown on file / serialization failures.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown on invalid run configuration (empty split, single class, bad schedule, ...).
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

} // namespace fognet
