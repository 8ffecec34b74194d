#include "mahalf/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mahalf/errors.hpp"

namespace mahalf {

Jet remark_solution(const Vec& x, int dim) {
    if (dim != 2 && dim != 3) throw DimensionError("remark_solution: dim must be 2 or 3");
    if (x.size() != dim) throw ArgumentError("remark_solution: point/dim mismatch");
    const double xn = x[dim - 1];
    if (xn < 0.0) throw PointDomainError("remark_solution: x_n must be >= 0");

    const double d = xn + 1.0;
    Jet jet;
    jet.gradient = Vec::Zero(dim);
    jet.hessian = Mat::Zero(dim, dim);

    jet.value = x[0] * x[0] / (2.0 * d) + (xn * xn * xn + 3.0 * xn * xn) / 6.0;
    jet.gradient[0] = x[0] / d;
    jet.gradient[dim - 1] = -x[0] * x[0] / (2.0 * d * d) + 0.5 * (xn * xn + 2.0 * xn);
    jet.hessian(0, 0) = 1.0 / d;
    jet.hessian(0, dim - 1) = jet.hessian(dim - 1, 0) = -x[0] / (d * d);
    jet.hessian(dim - 1, dim - 1) = x[0] * x[0] / (d * d * d) + d;

    for (int k = 1; k + 1 < dim; ++k) {
        jet.value += 0.5 * x[k] * x[k];
        jet.gradient[k] = x[k];
        jet.hessian(k, k) = 1.0;
    }
    return jet;
}

// ---------------------------------------------------------------------------
// SourceProfile

namespace {

void check_one_sided(const std::vector<double>& vals, double upper) {
    if (upper < 1.0) throw ValidationError("profile: upper bound must be >= 1");
    const bool plus = std::all_of(vals.begin(), vals.end(),
                                  [](double v) { return v >= 0.0 && v <= 1.0 + 1e-12; });
    const bool minus = std::all_of(vals.begin(), vals.end(), [upper](double v) {
        return v >= 1.0 - 1e-12 && v <= upper + 1e-12;
    });
    if (!plus && !minus)
        throw ValidationError(
            "profile: values must satisfy 0 <= f <= 1 (plus type) or 1 <= f <= Lambda (minus type)");
}

// Adaptive Simpson for integral of g over [a, b].
double adaptive_simpson(const std::function<double(double)>& g, double a, double b, double fa,
                        double fm, double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = g(lm), frm = g(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return adaptive_simpson(g, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
           adaptive_simpson(g, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

double integrate(const std::function<double(double)>& g, double a, double b, double tol) {
    if (b <= a) return 0.0;
    const double m = 0.5 * (a + b);
    const double fa = g(a), fm = g(m), fb = g(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson(g, a, b, fa, fm, fb, whole, tol, 48);
}

}  // namespace

SourceProfile SourceProfile::piecewise_constant(std::vector<double> edges,
                                                std::vector<double> values, double upper_bound) {
    if (edges.size() < 2 || values.size() + 1 != edges.size())
        throw ValidationError("profile: need edges.size() == values.size() + 1 >= 2");
    if (edges.front() != 0.0) throw ValidationError("profile: edges must start at 0");
    if (!std::is_sorted(edges.begin(), edges.end()))
        throw ValidationError("profile: edges must be increasing");
    if (edges.back() > 1.0 + 1e-12)
        throw ValidationError("profile: support of f - 1 must lie in [0, 1]");
    check_one_sided(values, upper_bound);

    SourceProfile p;
    p.piecewise_ = true;
    p.edges_ = std::move(edges);
    p.values_ = std::move(values);
    p.support_ = p.edges_.back();
    p.upper_ = upper_bound;
    p.lower_ = 1.0;
    for (double v : p.values_) p.lower_ = std::min(p.lower_, v);
    return p;
}

SourceProfile SourceProfile::from_function(std::function<double(double)> f, double support_radius,
                                           double upper_bound) {
    if (support_radius < 0.0 || support_radius > 1.0 + 1e-12)
        throw ValidationError("profile: support radius must lie in [0, 1]");
    std::vector<double> probe;
    const int n = 2048;
    for (int i = 0; i <= n; ++i) probe.push_back(f(support_radius * i / n));
    check_one_sided(probe, upper_bound);

    SourceProfile p;
    p.piecewise_ = false;
    p.fn_ = std::move(f);
    p.support_ = support_radius;
    p.upper_ = upper_bound;
    p.lower_ = *std::min_element(probe.begin(), probe.end());
    return p;
}

SourceProfile SourceProfile::uniform_one() {
    return piecewise_constant({0.0, 1.0}, {1.0}, 1.0);
}

double SourceProfile::value(double s) const {
    if (s < 0.0) throw PointDomainError("profile: s must be >= 0");
    if (s >= support_) return 1.0;
    if (!piecewise_) return fn_(s);
    for (std::size_t k = 0; k + 1 < edges_.size(); ++k)
        if (s < edges_[k + 1]) return values_[k];
    return 1.0;
}

double SourceProfile::double_integral(double xn) const {
    if (xn < 0.0) throw PointDomainError("profile: x_n must be >= 0");
    // integral_0^{xn} integral_0^t f = integral_0^{xn} (xn - s) f(s) ds
    double acc = 0.0;
    const double cut = std::min(xn, support_);
    if (piecewise_) {
        for (std::size_t k = 0; k + 1 < edges_.size(); ++k) {
            const double a = edges_[k], b = std::min(edges_[k + 1], cut);
            if (b <= a) break;
            const double ra = xn - a, rb = xn - b;
            acc += values_[k] * 0.5 * (ra * ra - rb * rb);
        }
    } else if (cut > 0.0) {
        acc = integrate([this, xn](double s) { return (xn - s) * fn_(s); }, 0.0, cut, 1e-10);
    }
    if (xn > support_) {
        const double tail = xn - support_;
        acc += 0.5 * tail * tail;
    }
    return acc;
}

double u_pm(const Vec& x, const SourceProfile& profile) {
    const int dim = static_cast<int>(x.size());
    const double xn = x[dim - 1];
    if (xn < 0.0) throw PointDomainError("u_pm: x_n must be >= 0");
    double lateral = 0.0;
    for (int k = 0; k + 1 < dim; ++k) lateral += x[k] * x[k];
    return 0.5 * lateral + profile.double_integral(xn);
}

// ---------------------------------------------------------------------------
// Barrier

BarrierSpec BarrierSpec::with_default_delta(double s, int dim, double inner_radius) {
    BarrierSpec spec;
    spec.s = s;
    spec.delta = 0.5 * std::min(1.0, s / (dim - 1));
    spec.inner_radius = inner_radius;
    return spec;
}

void BarrierSpec::validate(int dim) const {
    if (!(delta > 0.0) || !(delta < 1.0) || !(delta < s / (dim - 1)))
        throw ValidationError("barrier: need 0 < delta < min(1, s/(dim-1)); delta = " +
                              std::to_string(delta) + ", s = " + std::to_string(s));
}

double barrier_value(const Vec& x, const BarrierSpec& spec, int dim) {
    spec.validate(dim);
    const double r = x.norm();
    if (r == 0.0) throw PointDomainError("barrier: singular at the origin");
    const double xn = x[dim - 1];
    if (xn < 0.0) throw PointDomainError("barrier: x_n must be >= 0");
    const double rho = xn / std::pow(r, dim);
    return rho - std::pow(rho, 1.0 + spec.delta);
}

BarrierJet barrier_w(const Vec& x, const BarrierSpec& spec, int dim) {
    spec.validate(dim);
    if (x.size() != dim) throw ArgumentError("barrier: point/dim mismatch");
    const double r = x.norm();
    if (r == 0.0) throw PointDomainError("barrier: singular at the origin");
    const double xn = x[dim - 1];
    if (!(xn > 0.0)) throw PointDomainError("barrier: derivatives need x_n > 0");

    const double n = dim;
    const double delta = spec.delta;
    const double rn = std::pow(r, n);
    const double rho = xn / rn;
    const double rho_d = std::pow(rho, delta);
    const double rho_dm1 = std::pow(rho, delta - 1.0);

    const double lead = 1.0 - (1.0 + delta) * rho_d;  // d/d(rho) of rho - rho^{1+delta}
    const double curv = -delta * (1.0 + delta) * rho_dm1;

    BarrierJet jet;
    jet.gradient = Vec::Zero(dim);
    jet.hessian = Mat::Zero(dim, dim);

    Vec drho(dim);
    const double rn2 = rn * r * r;
    for (int i = 0; i < dim; ++i)
        drho[i] = (i == dim - 1 ? 1.0 / rn : 0.0) - n * xn * x[i] / rn2;

    jet.value = rho - rho * rho_d;
    jet.gradient = lead * drho;

    const double rn4 = rn2 * r * r;
    for (int i = 0; i < dim; ++i)
        for (int j = i; j < dim; ++j) {
            const double din = i == dim - 1 ? 1.0 : 0.0;
            const double djn = j == dim - 1 ? 1.0 : 0.0;
            const double dij = i == j ? 1.0 : 0.0;
            const double d2rho =
                -n * (din * x[j] + djn * x[i] + dij * xn) / rn2 + n * (n + 2.0) * xn * x[i] * x[j] / rn4;
            const double hij = lead * d2rho + curv * drho[i] * drho[j];
            jet.hessian(i, j) = jet.hessian(j, i) = hij;
        }

    jet.laplacian =
        curv * (1.0 / (rn * rn) + (n * n - 2.0 * n) * xn * xn / (rn * rn * r * r));
    return jet;
}

double poisson_rate(const Vec& x, int dim) {
    if (x.size() != dim) throw ArgumentError("poisson_rate: point/dim mismatch");
    const double r = x.norm();
    if (r == 0.0) throw PointDomainError("poisson_rate: singular at the origin");
    return x[dim - 1] / std::pow(r, dim);
}

}  // namespace mahalf
