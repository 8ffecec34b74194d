#include <doctest.h>

#include <cmath>
#include <random>

#include "mahalf/errors.hpp"
#include "mahalf/oracles.hpp"
#include "mahalf/quadratic.hpp"

using namespace mahalf;

namespace {

double fd_laplacian(const std::function<double(const Vec&)>& f, const Vec& x, double h) {
    double acc = 0.0;
    for (int a = 0; a < x.size(); ++a) {
        Vec p = x, m = x;
        p[a] += h;
        m[a] -= h;
        acc += (f(p) - 2.0 * f(x) + f(m)) / (h * h);
    }
    return acc;
}

double fit_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = xs.size();
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST_CASE("remark solution: values, boundary data, unit Hessian determinant") {
    Jet j = remark_solution(make_point(1.0, 0.0), 2);
    CHECK(j.value == doctest::Approx(0.5).epsilon(1e-14));

    j = remark_solution(make_point(0.0, 0.0), 2);
    CHECK(j.value == 0.0);
    CHECK(j.gradient.norm() == 0.0);

    j = remark_solution(make_point(2.0, 1.0), 2);
    CHECK(j.value == doctest::Approx(5.0 / 3.0).epsilon(1e-14));
    CHECK(j.hessian.determinant() == doctest::Approx(1.0).epsilon(1e-14));

    CHECK_THROWS_AS(remark_solution(make_point(1.0, -0.1), 2), PointDomainError);
}

TEST_CASE("remark solution: det D^2 u = 1 and convexity at 10^4 random points") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> lat(-10.0, 10.0), ver(0.0, 10.0);
    for (int dim : {2, 3}) {
        for (int t = 0; t < 10000; ++t) {
            Vec x(dim);
            for (int a = 0; a < dim - 1; ++a) x[a] = lat(rng);
            x[dim - 1] = ver(rng);
            const Jet j = remark_solution(x, dim);
            CHECK(std::abs(j.hessian.determinant() - 1.0) <= 1e-10);
            Eigen::SelfAdjointEigenSolver<Mat> eig(j.hessian);
            CHECK(eig.eigenvalues().minCoeff() > 0.0);
        }
    }
}

TEST_CASE("remark solution: gradient and Hessian match finite differences") {
    const Vec x = make_point(1.3, 0.7);
    const Jet j = remark_solution(x, 2);
    const double h = 1e-5;
    for (int a = 0; a < 2; ++a) {
        Vec p = x, m = x;
        p[a] += h;
        m[a] -= h;
        const double fd = (remark_solution(p, 2).value - remark_solution(m, 2).value) / (2 * h);
        CHECK(j.gradient[a] == doctest::Approx(fd).epsilon(1e-8));
        for (int b = 0; b < 2; ++b) {
            const double fd2 =
                (remark_solution(p, 2).gradient[b] - remark_solution(m, 2).gradient[b]) / (2 * h);
            CHECK(j.hessian(a, b) == doctest::Approx(fd2).epsilon(1e-7));
        }
    }
}

TEST_CASE("u_pm closed forms on the spec profiles") {
    const SourceProfile one = SourceProfile::uniform_one();
    CHECK(u_pm(make_point(0.7, 1.3), one) ==
          doctest::Approx(0.5 * (0.7 * 0.7 + 1.3 * 1.3)).epsilon(1e-14));

    const SourceProfile plus = SourceProfile::piecewise_constant({0.0, 1.0}, {0.0}, 1.0);
    const double v = u_pm(make_point(0.0, 0.5), plus);
    CHECK(v == 0.0);
    CHECK(0.5 * 0.25 - 0.5 <= v);  // lower sandwich holds at this point

    const SourceProfile minus = SourceProfile::piecewise_constant({0.0, 1.0}, {2.0}, 2.0);
    const double w = u_pm(make_point(0.0, 2.0), minus);
    CHECK(w == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(0.5 * 4.0 <= w);
    CHECK(w <= 0.5 * 4.0 + (2.0 - 1.0) * 2.0);
}

TEST_CASE("u_pm: the sandwich chain holds at 10^4 random points") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> lat(-5.0, 5.0), ver(0.0, 5.0), unit(0.0, 1.0);
    const double Lambda = 3.0;

    for (int t = 0; t < 100; ++t) {
        // Random two-piece profiles of both types.
        const double split = 0.25 + 0.5 * unit(rng);
        const SourceProfile plus = SourceProfile::piecewise_constant(
            {0.0, split, 1.0}, {unit(rng), unit(rng)}, Lambda);
        const SourceProfile minus = SourceProfile::piecewise_constant(
            {0.0, split, 1.0}, {1.0 + (Lambda - 1.0) * unit(rng), 1.0 + (Lambda - 1.0) * unit(rng)},
            Lambda);
        for (int p = 0; p < 100; ++p) {
            Vec x = make_point(lat(rng), ver(rng));
            const double base = 0.5 * x.squaredNorm();
            const double xn = x[1];
            const double up = u_pm(x, plus);
            const double um = u_pm(x, minus);
            CHECK(base - xn <= up + 1e-12);
            CHECK(up <= base + 1e-12);
            CHECK(base <= um + 1e-12);
            CHECK(um <= base + (Lambda - 1.0) * xn + 1e-12);
        }
    }
}

TEST_CASE("u_pm function-backed profiles agree with the closed form") {
    const SourceProfile exact = SourceProfile::piecewise_constant({0.0, 0.5, 1.0}, {0.25, 0.75}, 2.0);
    const SourceProfile fn = SourceProfile::from_function(
        [](double s) { return s < 0.5 ? 0.25 : (s < 1.0 ? 0.75 : 1.0); }, 1.0, 2.0);
    for (double xn : {0.3, 0.8, 1.7, 4.0})
        CHECK(u_pm(make_point(1.0, xn), fn) ==
              doctest::Approx(u_pm(make_point(1.0, xn), exact)).epsilon(1e-9));
}

TEST_CASE("profile invariants are enforced") {
    CHECK_THROWS_AS(SourceProfile::piecewise_constant({0.0, 2.0}, {1.0}, 2.0), ValidationError);
    CHECK_THROWS_AS(SourceProfile::piecewise_constant({0.0, 0.5, 1.0}, {0.5, 1.5}, 2.0),
                    ValidationError);  // straddles 1: neither plus nor minus type
    CHECK_THROWS_AS(SourceProfile::piecewise_constant({0.0, 1.0}, {3.0}, 2.0), ValidationError);
    CHECK_THROWS_AS(u_pm(make_point(0.0, -1.0), SourceProfile::uniform_one()), PointDomainError);
}

TEST_CASE("quadratic_eval spot values") {
    CHECK(quadratic_eval(QuadraticData::half_norm_squared(2), make_point(3.0, 4.0)) == 12.5);

    QuadraticData q(Mat::Identity(2, 2), make_point(0.0, 1.0), 0.0);
    CHECK(quadratic_eval(q, make_point(0.0, 2.0)) == 4.0);

    Mat A(2, 2);
    A << 2.0, 0.0, 0.0, 0.5;
    QuadraticData r(A, Vec::Zero(2), 1.0);
    CHECK(quadratic_eval(r, make_point(1.0, 2.0)) == 3.0);
}

TEST_CASE("quadratic with A = I equals u_pm with f = 1 everywhere") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> lat(-8.0, 8.0), ver(0.0, 8.0);
    const QuadraticData q = QuadraticData::half_norm_squared(2);
    const SourceProfile one = SourceProfile::uniform_one();
    for (int t = 0; t < 1000; ++t) {
        const Vec x = make_point(lat(rng), ver(rng));
        CHECK(quadratic_eval(q, x) == doctest::Approx(u_pm(x, one)).epsilon(1e-14));
    }
}

TEST_CASE("barrier value spot checks") {
    BarrierSpec spec = BarrierSpec::with_default_delta(1.0, 2);
    CHECK(barrier_value(make_point(0.0, 1.0), spec, 2) == 0.0);

    spec.delta = 0.5;
    const double v = barrier_w(make_point(0.0, 2.0), spec, 2).value;
    CHECK(v == doctest::Approx(0.5 - std::pow(0.5, 1.5)).epsilon(1e-12));
    CHECK(v == doctest::Approx(0.14644661).epsilon(1e-7));

    CHECK_THROWS_AS(barrier_value(make_point(0.0, 0.0), spec, 2), PointDomainError);
    BarrierSpec bad = spec;
    bad.delta = 0.9;
    bad.s = 0.5;  // 0.9 >= s/(dim-1)
    CHECK_THROWS_AS(barrier_w(make_point(0.0, 2.0), bad, 2), ValidationError);
}

TEST_CASE("barrier: Hessian trace equals the closed-form Laplacian") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> lat(-12.0, 12.0), ver(0.05, 10.0), ds(0.1, 0.8);
    for (int dim : {2, 3}) {
        for (int t = 0; t < 5000; ++t) {
            Vec x(dim);
            for (int a = 0; a < dim - 1; ++a) x[a] = lat(rng);
            x[dim - 1] = ver(rng);
            if (x.norm() < 1.0) continue;
            BarrierSpec spec;
            spec.s = 1.0;
            spec.delta = ds(rng) * std::min(1.0, spec.s / (dim - 1));
            const BarrierJet j = barrier_w(x, spec, dim);
            const double tr = j.hessian.trace();
            CHECK(std::abs(tr - j.laplacian) <= 1e-10 * std::max(1.0, std::abs(j.laplacian)));
            CHECK(j.laplacian < 0.0);
        }
    }
}

TEST_CASE("barrier: finite-difference Laplacian converges at second order") {
    BarrierSpec spec;
    spec.delta = 0.3;
    spec.s = 1.0;
    const std::vector<Vec> pts = {make_point(1.0, 1.5), make_point(-2.0, 0.8),
                                  make_point(0.5, 2.5)};
    std::vector<double> log_h, log_err;
    for (double h : {1e-2, 5e-3, 2.5e-3}) {
        double err = 0.0;
        for (const Vec& x : pts) {
            const BarrierJet j = barrier_w(x, spec, 2);
            const double fd = fd_laplacian(
                [&](const Vec& p) { return barrier_w(p, spec, 2).value; }, x, h);
            err = std::max(err, std::abs(fd - j.laplacian));
        }
        log_h.push_back(std::log(h));
        log_err.push_back(std::log(err));
    }
    const double slope = fit_slope(log_h, log_err);
    CHECK(slope == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("barrier gradient matches finite differences") {
    BarrierSpec spec;
    spec.delta = 0.4;
    spec.s = 1.0;
    const Vec x = make_point(1.2, 0.9);
    const BarrierJet j = barrier_w(x, spec, 2);
    const double h = 1e-6;
    for (int a = 0; a < 2; ++a) {
        Vec p = x, m = x;
        p[a] += h;
        m[a] -= h;
        const double fd = (barrier_value(p, spec, 2) - barrier_value(m, spec, 2)) / (2 * h);
        CHECK(j.gradient[a] == doctest::Approx(fd).epsilon(1e-6));
    }
}

TEST_CASE("poisson rate values and harmonicity") {
    CHECK(poisson_rate(make_point(0.0, 1.0), 2) == 1.0);
    CHECK(poisson_rate(make_point(1.0, 0.0), 2) == 0.0);
    CHECK(poisson_rate(make_point(3.0, 4.0), 2) == doctest::Approx(0.16).epsilon(1e-14));
    CHECK_THROWS_AS(poisson_rate(make_point(0.0, 0.0), 2), PointDomainError);

    // The half-plane Poisson kernel is harmonic: FD Laplacian is O(h^2).
    const auto kernel = [](const Vec& x) { return poisson_rate(x, 2); };
    for (double h : {1e-2, 5e-3}) {
        for (const Vec& x : {make_point(1.0, 1.0), make_point(-2.0, 0.5), make_point(0.0, 3.0)}) {
            CHECK(std::abs(fd_laplacian(kernel, x, h)) <= 10.0 * h * h);
        }
    }
}
