#pragma once

#include "mahalf/types.hpp"

namespace mahalf {

/// Quadratic polynomial q(x) = (1/2) x^T A x + b.x + c with symmetric A.
/// The far-field asymptote is such a polynomial with det A = 1.
struct QuadraticData {
    Mat A;
    Vec b;
    double c = 0.0;

    QuadraticData() = default;
    QuadraticData(Mat A, Vec b, double c);

    int dim() const { return static_cast<int>(A.rows()); }
    double eval(const Vec& x) const;
    Vec gradient(const Vec& x) const;

    /// (1/2) x^T x, the model quadratic.
    static QuadraticData half_norm_squared(int dim);

    /// Rescale A to unit determinant (b, c untouched).
    QuadraticData normalized() const;

    bool unit_det(double tol = 1e-12) const;

    /// Coefficients of the restriction to {x_n = 0}: a quadratic in x'.
    /// Returned as QuadraticData of dimension dim-1.
    QuadraticData bottom_restriction() const;
};

double quadratic_eval(const QuadraticData& q, const Vec& x);

/// Coefficient-level compatibility check of Theorem-style boundary data:
/// p(x') must equal q restricted to {x_n = 0}.
bool bottom_compatible(const QuadraticData& q, const QuadraticData& p, double tol = 1e-10);

}  // namespace mahalf
