#pragma once

#include <functional>
#include <vector>

#include "mahalf/quadratic.hpp"
#include "mahalf/types.hpp"

namespace mahalf {

/// Value, gradient and Hessian of a smooth function at a point.
struct Jet {
    double value = 0.0;
    Vec gradient;
    Mat hessian;
};

/// The explicit non-polynomial solution of det D^2 u = 1 in the half space
/// with boundary data |x'|^2 / 2:
///   u = x_1^2 / (2 (x_n + 1)) + (x_2^2 + ... + x_{n-1}^2)/2 + (x_n^3 + 3 x_n^2)/6.
/// det(hessian) = 1 identically. Requires x_n >= 0.
Jet remark_solution(const Vec& x, int dim);

/// One-dimensional source profile f(s) with support(f - 1) inside [0, 1] and
/// either 0 <= f <= 1 (plus type) or 1 <= f <= Lambda (minus type).
class SourceProfile {
public:
    /// Constant value v_k on [edges[k], edges[k+1]); f = 1 beyond the last edge.
    /// edges[0] must be 0 and the last edge at most 1. Double integrals are
    /// evaluated in closed form.
    static SourceProfile piecewise_constant(std::vector<double> edges, std::vector<double> values,
                                            double upper_bound);

    /// Arbitrary profile; integrals use adaptive quadrature (abs error <= 1e-10).
    /// The invariants are spot-checked on a dense sample of [0, support_radius].
    static SourceProfile from_function(std::function<double(double)> f, double support_radius,
                                       double upper_bound);

    /// f identically 1 (both a plus- and a minus-type profile).
    static SourceProfile uniform_one();

    double value(double s) const;

    /// U(x_n) = integral_0^{x_n} integral_0^t f(s) ds dt.
    double double_integral(double xn) const;

    double upper_bound() const { return upper_; }
    double lower_bound() const { return lower_; }
    double support_radius() const { return support_; }

private:
    SourceProfile() = default;

    bool piecewise_ = false;
    std::vector<double> edges_, values_;
    std::function<double(double)> fn_;
    double support_ = 0.0;
    double upper_ = 1.0;
    double lower_ = 1.0;
};

/// u_pm(x) = |x'|^2/2 + double integral of the profile up to x_n. Requires x_n >= 0.
double u_pm(const Vec& x, const SourceProfile& profile);

/// Parameters of the decay barrier w = rho - rho^{1+delta}, rho = x_n/|x|^n.
struct BarrierSpec {
    double delta = 0.25;
    double s = 1.0;       // coefficient perturbation exponent
    double inner_radius = 2.0;  // R_1: where the supersolution inequality is asserted

    /// delta centered in the admissible range (0, min(1, s/(dim-1))).
    static BarrierSpec with_default_delta(double s, int dim, double inner_radius = 2.0);

    /// Throws ValidationError unless 0 < delta < 1 and delta < s/(dim-1).
    void validate(int dim) const;
};

struct BarrierJet {
    double value = 0.0;
    Vec gradient;
    Mat hessian;
    /// Evaluated from its own closed form, independent of the Hessian trace.
    double laplacian = 0.0;
};

/// Closed-form barrier and all derivatives. Requires |x| > 0 and x_n > 0
/// (the value alone extends to x_n = 0, where w = 0; use barrier_value).
BarrierJet barrier_w(const Vec& x, const BarrierSpec& spec, int dim);

/// Value only; defined for x_n >= 0, |x| > 0.
double barrier_value(const Vec& x, const BarrierSpec& spec, int dim);

/// x_n / |x|^dim — the half-space Poisson-kernel decay profile. |x| > 0.
double poisson_rate(const Vec& x, int dim);

}  // namespace mahalf
