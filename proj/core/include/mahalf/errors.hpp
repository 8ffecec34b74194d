#pragma once

#include <stdexcept>
#include <string>

namespace mahalf {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Bad user-supplied configuration (non-integer extent ratio, unknown key, ...).
/// The message always names the offending field.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Unsupported space dimension (only 2 and 3 are built).
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Generic bad-argument error (index out of range, empty annulus, ...).
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// Input object violates one of its own invariants.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Point outside the mathematical domain of an oracle (x_n < 0, x = 0).
class PointDomainError : public Error {
public:
    using Error::Error;
};

/// Finite-difference stencil requested where neighbors are missing.
class StencilError : public Error {
public:
    using Error::Error;
};

/// Direct or iterative linear solve failed to reach its residual target.
class LinearSolverError : public Error {
public:
    LinearSolverError(const std::string& what, double achieved_residual)
        : Error(what), achieved_residual(achieved_residual) {}
    double achieved_residual = 0.0;
};

/// Matrix factorization failed (non-SPD input to a Cholesky-type routine).
class FactorizationError : public Error {
public:
    using Error::Error;
};

/// Coefficient field violated ellipticity at a concrete node.
class CoefficientError : public Error {
public:
    CoefficientError(const std::string& what, std::size_t node) : Error(what), node(node) {}
    std::size_t node = 0;
};

/// Section/level-set geometry degenerated (empty section, indefinite fit).
class SectionError : public Error {
public:
    using Error::Error;
};

/// Least-squares fit could not be determined (rank-deficient design matrix).
class FitError : public Error {
public:
    using Error::Error;
};

}  // namespace mahalf
