#include "mahalf/quadratic.hpp"

#include <cmath>

#include "mahalf/errors.hpp"

namespace mahalf {

QuadraticData::QuadraticData(Mat A_, Vec b_, double c_) : A(std::move(A_)), b(std::move(b_)), c(c_) {
    if (A.rows() != A.cols() || A.rows() != b.size())
        throw ArgumentError("quadratic: A must be square and match b");
    if (!A.isApprox(A.transpose(), 1e-12)) throw ValidationError("quadratic: A must be symmetric");
}

double QuadraticData::eval(const Vec& x) const { return 0.5 * x.dot(A * x) + b.dot(x) + c; }

Vec QuadraticData::gradient(const Vec& x) const { return A * x + b; }

QuadraticData QuadraticData::half_norm_squared(int dim) {
    return QuadraticData(Mat::Identity(dim, dim), Vec::Zero(dim), 0.0);
}

QuadraticData QuadraticData::normalized() const {
    const double det = A.determinant();
    if (!(det > 0.0)) throw ValidationError("quadratic: cannot normalize non-positive determinant");
    const double scale = std::pow(det, -1.0 / dim());
    return QuadraticData(scale * A, b, c);
}

bool QuadraticData::unit_det(double tol) const { return std::abs(A.determinant() - 1.0) <= tol; }

QuadraticData QuadraticData::bottom_restriction() const {
    const int d = dim();
    Mat Ab = A.topLeftCorner(d - 1, d - 1);
    Vec bb = b.head(d - 1);
    return QuadraticData(Ab, bb, c);
}

double quadratic_eval(const QuadraticData& q, const Vec& x) { return q.eval(x); }

bool bottom_compatible(const QuadraticData& q, const QuadraticData& p, double tol) {
    const QuadraticData r = q.bottom_restriction();
    return (r.A - p.A).cwiseAbs().maxCoeff() <= tol && (r.b - p.b).cwiseAbs().maxCoeff() <= tol &&
           std::abs(r.c - p.c) <= tol;
}

}  // namespace mahalf
