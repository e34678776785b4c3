#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace muygps {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Out-of-domain hyperparameters, k, batch sizes, probabilities and the like.
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Mismatched dimensions between inputs.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Too few observations for the requested operation.
class InsufficientDataError : public Error {
public:
    using Error::Error;
};

/// A model was used before it was fitted.
class StateError : public Error {
public:
    using Error::Error;
};

/// Rank-deficient least squares design.
class DegenerateDesignError : public Error {
public:
    using Error::Error;
};

/// Cholesky factorization failed. `minor` is the 0-based index of the leading
/// minor that was not positive.
class SingularityError : public Error {
public:
    SingularityError(const std::string& what, std::size_t minor)
        : Error(what), minor_(minor) {}

    [[nodiscard]] std::size_t minor() const noexcept { return minor_; }

private:
    std::size_t minor_;
};

/// Optimizer or estimator produced a non-finite or degenerate value.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Malformed input text. `line` is 1-based; 0 when not applicable.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line = 0)
        : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}

    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Input is well formed but does not describe a consistent grid or mask.
class StructureError : public Error {
public:
    using Error::Error;
};

/// Prediction and truth files do not describe the same points.
class AlignmentError : public Error {
public:
    using Error::Error;
};

/// Invalid or contradictory run configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A model file does not match the requested configuration.
class CompatibilityError : public Error {
public:
    using Error::Error;
};

}  // namespace muygps
