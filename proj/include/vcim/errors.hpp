#pragma once

#include <stdexcept>
#include <string>

namespace vcim {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Incompatible or impossible matrix/vector dimensions (e.g. p >= n).
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Fixed-effect design matrix does not have full column rank.
class RankDeficientError : public Error {
public:
    using Error::Error;
};

/// Model carries no information about the variance ratio (L = 1).
class DegenerateModelError : public Error {
public:
    using Error::Error;
};

/// A computed quantity violates a numerical sanity bound.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Argument outside its admissible domain.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Denominator statistic is exactly zero.
class DivisionByZeroError : public Error {
public:
    using Error::Error;
};

/// The stacked log-linear transform could not be inverted.
class SingularTransformError : public Error {
public:
    using Error::Error;
};

/// Adaptive integration failed to reach tolerance within its budget.
class QuadratureFailure : public Error {
public:
    using Error::Error;
};

/// Bracketing or refinement of the density mode failed.
class ModeSearchFailure : public Error {
public:
    using Error::Error;
};

/// Malformed run configuration (grids, levels, patterns).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed input file content.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Structurally invalid input (missing columns, too few groups).
class SchemaError : public Error {
public:
    using Error::Error;
};

/// Eigenvalue list not strictly decreasing.
class OrderError : public Error {
public:
    using Error::Error;
};

} // namespace vcim
