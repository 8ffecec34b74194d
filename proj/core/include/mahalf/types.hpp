#pragma once

#include <Eigen/Core>

namespace mahalf {

// Geometry lives in dimension 2 or 3; bounded-dynamic Eigen types keep a single
// code path with no heap traffic.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3>;

inline Vec make_point(double x1, double x2) {
    Vec p(2);
    p << x1, x2;
    return p;
}

inline Vec make_point(double x1, double x2, double x3) {
    Vec p(3);
    p << x1, x2, x3;
    return p;
}

}  // namespace mahalf
