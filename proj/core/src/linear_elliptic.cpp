#include "mahalf/linear_elliptic.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "mahalf/errors.hpp"

namespace mahalf {

CoefficientField CoefficientField::identity(int dim) {
    CoefficientField c;
    c.dim = dim;
    c.a = [dim](const Vec&) { return Mat(Mat::Identity(dim, dim)); };
    c.lambda = c.Lambda = 1.0;
    c.s = std::numeric_limits<double>::infinity();
    c.inner_radius = 0.0;
    return c;
}

void CoefficientField::spot_check(const std::vector<Vec>& points) const {
    for (const Vec& x : points) {
        const Mat m = a(x);
        if (!m.isApprox(m.transpose(), 1e-10))
            throw ValidationError("coefficient field not symmetric at a sample point");
        Eigen::SelfAdjointEigenSolver<Mat> eig(m);
        const double lo = eig.eigenvalues().minCoeff();
        const double hi = eig.eigenvalues().maxCoeff();
        if (lo < lambda - 1e-9 || hi > Lambda + 1e-9)
            throw ValidationError("coefficient field violates ellipticity bounds at a sample point");
    }
}

CoefficientField random_admissible_field(std::uint64_t seed, int dim, double lambda, double Lambda,
                                         double s, double inner_radius) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> amp(-1.0, 1.0);
    std::uniform_real_distribution<double> wave(-2.0, 2.0);
    std::uniform_real_distribution<double> phase(0.0, 6.283185307179586);

    struct Entry {
        double amplitude;
        Vec k;
        double phi;
    };
    std::vector<Entry> entries;
    for (int i = 0; i < dim; ++i)
        for (int j = i; j < dim; ++j) {
            Entry e;
            e.amplitude = amp(rng) / dim;
            e.k = Vec(dim);
            for (int d = 0; d < dim; ++d) e.k[d] = wave(rng);
            e.phi = phase(rng);
            entries.push_back(e);
        }

    CoefficientField c;
    c.dim = dim;
    c.lambda = lambda;
    c.Lambda = Lambda;
    c.s = s;
    c.inner_radius = inner_radius;
    c.a = [entries, dim, lambda, Lambda, s, inner_radius](const Vec& x) {
        const double r = std::max(x.norm(), std::max(inner_radius, 1e-6));
        const double decay = std::pow(r, -s);
        Mat m = Mat::Identity(dim, dim);
        std::size_t e = 0;
        for (int i = 0; i < dim; ++i)
            for (int j = i; j < dim; ++j, ++e) {
                const double v =
                    decay * entries[e].amplitude * std::sin(entries[e].k.dot(x) + entries[e].phi);
                m(i, j) += v;
                if (j != i) m(j, i) += v;
            }
        Eigen::SelfAdjointEigenSolver<Mat> eig(m);
        Vec lam = eig.eigenvalues();
        bool clipped = false;
        for (int d = 0; d < dim; ++d) {
            if (lam[d] < lambda) { lam[d] = lambda; clipped = true; }
            if (lam[d] > Lambda) { lam[d] = Lambda; clipped = true; }
        }
        if (!clipped) return m;
        return Mat(eig.eigenvectors() * lam.asDiagonal() * eig.eigenvectors().transpose());
    };
    return c;
}

// ---------------------------------------------------------------------------
// ExteriorRegion

namespace {

std::vector<std::array<int, 3>> neighborhood_offsets(int dim) {
    std::vector<std::array<int, 3>> offs;
    for (int a = 0; a < dim; ++a)
        for (int s : {-1, 1}) {
            std::array<int, 3> o{0, 0, 0};
            o[a] = s;
            offs.push_back(o);
        }
    for (int a = 0; a < dim; ++a)
        for (int b = a + 1; b < dim; ++b)
            for (int sa : {-1, 1})
                for (int sb : {-1, 1}) {
                    std::array<int, 3> o{0, 0, 0};
                    o[a] = sa;
                    o[b] = sb;
                    offs.push_back(o);
                }
    return offs;
}

}  // namespace

ExteriorRegion::ExteriorRegion(GridPtr grid, double inner_radius,
                               std::optional<double> outer_radius)
    : grid_(std::move(grid)), inner_radius_(inner_radius), outer_radius_(outer_radius) {
    if (!(inner_radius >= 0.0)) throw ArgumentError("exterior region: inner radius must be >= 0");
    if (outer_radius && !(*outer_radius > inner_radius))
        throw ArgumentError("exterior region: outer radius must exceed the inner radius");

    const HalfGrid& g = *grid_;
    const std::size_t n = g.node_count();
    roles_.assign(n, Role::Interior);

    // 0 = active, 1 = excluded by inner mask, 2 = excluded by outer mask
    std::vector<std::uint8_t> mask(n, 0);
    for (std::size_t idx = 0; idx < n; ++idx) {
        const double r = g.position(idx).norm();
        if (r < inner_radius_) mask[idx] = 1;
        else if (outer_radius_ && r > *outer_radius_) mask[idx] = 2;
    }

    const auto offs = neighborhood_offsets(g.dim());
    for (std::size_t idx = 0; idx < n; ++idx) {
        if (mask[idx] != 0) {
            roles_[idx] = Role::Excluded;
            continue;
        }
        const NodeClass cls = g.classify(idx);
        if (cls == NodeClass::Bottom) {
            roles_[idx] = Role::Bottom;
            continue;
        }
        bool near_inner = false, near_outer = false;
        const auto mi = g.multi_index(idx);
        for (const auto& o : offs) {
            const int i = mi[0] + o[0], j = mi[1] + o[1], k = mi[2] + o[2];
            if (!g.in_bounds(i, j, k)) continue;
            const std::uint8_t m = mask[g.flat_index(i, j, k)];
            near_inner = near_inner || m == 1;
            near_outer = near_outer || m == 2;
        }
        if (near_inner) roles_[idx] = Role::InnerFrontier;
        else if (near_outer) roles_[idx] = Role::OuterArc;
        else if (cls == NodeClass::Outer) roles_[idx] = Role::Outer;
        else roles_[idx] = Role::Interior;
    }
    for (std::size_t idx = 0; idx < n; ++idx)
        if (roles_[idx] == Role::Interior) interior_.push_back(idx);
    if (interior_.empty()) throw ArgumentError("exterior region has no interior nodes");
}

RegionData RegionData::uniform(double value) {
    auto fn = [value](const Vec&) { return value; };
    return RegionData{fn, fn, fn, fn};
}

RegionData RegionData::from_function(std::function<double(const Vec&)> fn) {
    return RegionData{fn, fn, fn, fn};
}

// ---------------------------------------------------------------------------
// Assembly and solve

LinearSystem assemble_nondivergence(const ExteriorRegion& region, const CoefficientField& coeffs) {
    const HalfGrid& g = region.grid();
    const int dim = g.dim();
    const double h2 = g.spacing() * g.spacing();
    const std::size_t n = g.node_count();

    std::ptrdiff_t off[3] = {1, g.lateral_nodes(),
                             static_cast<std::ptrdiff_t>(g.lateral_nodes()) * g.lateral_nodes()};
    if (dim == 2) off[2] = 0;

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(n * (dim == 2 ? 9 : 19));
    for (std::size_t idx = 0; idx < n; ++idx) {
        if (region.role(idx) != ExteriorRegion::Role::Interior) {
            trip.emplace_back(static_cast<int>(idx), static_cast<int>(idx), 1.0);
            continue;
        }
        const Vec x = g.position(idx);
        const Mat a = coeffs(x);
        {
            Eigen::SelfAdjointEigenSolver<Mat> eig(a);
            if (eig.eigenvalues().minCoeff() < coeffs.lambda - 1e-9 ||
                eig.eigenvalues().maxCoeff() > coeffs.Lambda + 1e-9)
                throw CoefficientError(
                    "ellipticity bounds violated at node " + std::to_string(idx), idx);
        }
        double center = 0.0;
        for (int ax = 0; ax < dim; ++ax) center -= 2.0 * a(ax, ax);
        trip.emplace_back(static_cast<int>(idx), static_cast<int>(idx), center / h2);
        for (int ax = 0; ax < dim; ++ax) {
            trip.emplace_back(static_cast<int>(idx), static_cast<int>(idx + off[ax]),
                              a(ax, ax) / h2);
            trip.emplace_back(static_cast<int>(idx), static_cast<int>(idx - off[ax]),
                              a(ax, ax) / h2);
        }
        for (int ax = 0; ax < dim; ++ax)
            for (int bx = ax + 1; bx < dim; ++bx) {
                const double w = a(ax, bx) / (2.0 * h2);
                if (w == 0.0) continue;
                trip.emplace_back(static_cast<int>(idx), static_cast<int>(idx + off[ax] + off[bx]), w);
                trip.emplace_back(static_cast<int>(idx), static_cast<int>(idx - off[ax] - off[bx]), w);
                trip.emplace_back(static_cast<int>(idx), static_cast<int>(idx + off[ax] - off[bx]), -w);
                trip.emplace_back(static_cast<int>(idx), static_cast<int>(idx - off[ax] + off[bx]), -w);
            }
    }
    LinearSystem sys;
    sys.matrix.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    sys.matrix.setFromTriplets(trip.begin(), trip.end());
    return sys;
}

ScalarField solve_linear_dirichlet(const ExteriorRegion& region, const CoefficientField& coeffs,
                                   const RegionData& data, double rel_tol) {
    const HalfGrid& g = region.grid();
    const std::size_t n = g.node_count();
    LinearSystem sys = assemble_nondivergence(region, coeffs);

    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    for (std::size_t idx = 0; idx < n; ++idx) {
        const Vec x = g.position(idx);
        switch (region.role(idx)) {
            case ExteriorRegion::Role::Bottom: rhs[idx] = data.bottom(x); break;
            case ExteriorRegion::Role::Outer: rhs[idx] = data.outer(x); break;
            case ExteriorRegion::Role::InnerFrontier: rhs[idx] = data.inner(x); break;
            case ExteriorRegion::Role::OuterArc:
                rhs[idx] = data.outer_arc ? data.outer_arc(x) : data.outer(x);
                break;
            default: break;
        }
    }

    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(sys.matrix);
    if (lu.info() != Eigen::Success)
        throw LinearSolverError("nondivergence system factorization failed", 1.0);
    const Eigen::VectorXd sol = lu.solve(rhs);
    const double rel = (sys.matrix * sol - rhs).norm() / std::max(rhs.norm(), 1e-300);
    if (rel > rel_tol)
        throw LinearSolverError("linear solve above residual tolerance", rel);

    ScalarField u(region.grid_ptr(), 0.0);
    for (std::size_t idx = 0; idx < n; ++idx) u[idx] = sol[static_cast<Eigen::Index>(idx)];
    return u;
}

// ---------------------------------------------------------------------------
// Barrier supersolution check

namespace {

double operator_on_barrier(const CoefficientField& coeffs, const BarrierSpec& spec, const Vec& x,
                           int dim) {
    const BarrierJet jet = barrier_w(x, spec, dim);
    const Mat a = coeffs(x);
    double acc = 0.0;
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) acc += a(i, j) * jet.hessian(i, j);
    return acc;
}

std::vector<Vec> upper_directions(int dim, int n_angles) {
    std::vector<Vec> dirs;
    if (dim == 2) {
        for (int m = 0; m < n_angles; ++m) {
            const double theta = M_PI * (m + 0.5) / n_angles;
            dirs.push_back(make_point(std::cos(theta), std::sin(theta)));
        }
    } else {
        const int na = std::max(4, n_angles / 6);
        for (int p = 0; p < na; ++p) {
            const double polar = 0.5 * M_PI * (p + 0.5) / na;
            for (int q = 0; q < n_angles; ++q) {
                const double az = 2.0 * M_PI * q / n_angles;
                dirs.push_back(make_point(std::cos(polar) * std::cos(az),
                                          std::cos(polar) * std::sin(az), std::sin(polar)));
            }
        }
    }
    return dirs;
}

}  // namespace

BarrierCheckReport barrier_supersolution_check(const CoefficientField& coeffs,
                                               const BarrierSpec& spec,
                                               const std::vector<Vec>& samples,
                                               const BarrierSweepOptions& sweep) {
    const int dim = coeffs.dim;
    spec.validate(dim);
    BarrierCheckReport rep;

    rep.max_over_samples = -std::numeric_limits<double>::infinity();
    for (const Vec& x : samples) {
        if (x.norm() < spec.inner_radius - 1e-12)
            throw ArgumentError("barrier check: sample inside |x| < R_1");
        if (!(x[dim - 1] > 0.0)) throw ArgumentError("barrier check: sample needs x_n > 0");
        rep.max_over_samples = std::max(rep.max_over_samples, operator_on_barrier(coeffs, spec, x, dim));
    }
    rep.pass = !samples.empty() && rep.max_over_samples <= 1e-12;

    const auto dirs = upper_directions(dim, sweep.n_angles);
    for (int k = 0; k < sweep.n_radii; ++k) {
        const double t = sweep.n_radii == 1 ? 0.0 : static_cast<double>(k) / (sweep.n_radii - 1);
        const double r = sweep.r_lo * std::pow(sweep.r_hi / sweep.r_lo, t);
        double worst = -std::numeric_limits<double>::infinity();
        for (const Vec& d : dirs) worst = std::max(worst, operator_on_barrier(coeffs, spec, Vec(r * d), dim));
        rep.sweep.push_back({r, worst});
    }
    // Smallest radius from which the inequality holds for every larger sweep radius.
    int first_good = -1;
    for (int k = static_cast<int>(rep.sweep.size()) - 1; k >= 0; --k) {
        if (rep.sweep[k].max_operator_value <= 1e-12) first_good = k;
        else break;
    }
    if (first_good >= 0) {
        rep.sweep_found_radius = true;
        rep.empirical_inner_radius = rep.sweep[first_good].radius;
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Lemma-style experiments

StrictBoundReport strict_interior_bound_experiment(const CoefficientField& coeffs, double R0,
                                                   double h) {
    if (!(R0 > 0.0)) throw ArgumentError("strict bound experiment: R0 must be positive");
    if (h <= 0.0) h = R0 / 16.0;
    const double L = 4.0 * R0 + 4.0 * h;
    auto grid = std::make_shared<HalfGrid>(coeffs.dim, L, L, h);
    ExteriorRegion region(grid, R0, 4.0 * R0);

    RegionData data = RegionData::uniform(1.0);
    data.bottom = [](const Vec&) { return 0.5; };
    const ScalarField u = solve_linear_dirichlet(region, coeffs, data);

    StrictBoundReport rep;
    rep.h = h;
    rep.max_middle_arc = -std::numeric_limits<double>::infinity();
    const int n_samples = 256;
    const auto dirs = upper_directions(coeffs.dim, n_samples);
    for (const Vec& d : dirs)
        rep.max_middle_arc = std::max(rep.max_middle_arc, u.interpolate(Vec(2.0 * R0 * d)));
    rep.eps0 = 1.0 - rep.max_middle_arc;
    return rep;
}

LimitReport limit_at_infinity_experiment(const CoefficientField& coeffs, double beta,
                                         const std::vector<double>& schedule,
                                         const std::function<double(const Vec&)>& bottom_data,
                                         const std::function<double(const Vec&)>& inner_data,
                                         const LimitOptions& opts) {
    if (schedule.empty() || !std::is_sorted(schedule.begin(), schedule.end()) ||
        std::adjacent_find(schedule.begin(), schedule.end()) != schedule.end())
        throw ArgumentError("limit experiment: schedule must be strictly increasing");

    LimitReport rep;
    for (double r : schedule) {
        const double h = r / (opts.cells_per_radius / 2);
        const double L = 2.0 * r;
        auto grid = std::make_shared<HalfGrid>(coeffs.dim, L, L, h);
        ExteriorRegion region(grid, coeffs.inner_radius);
        RegionData data;
        data.bottom = bottom_data;
        data.inner = inner_data;
        data.outer = [beta](const Vec&) { return beta; };
        const ScalarField u = solve_linear_dirichlet(region, coeffs, data);

        double sup = 0.0;
        const auto dirs = upper_directions(coeffs.dim, opts.arc_samples);
        for (const Vec& d : dirs) sup = std::max(sup, std::abs(u.interpolate(Vec(r * d)) - beta));
        rep.deviations.emplace_back(r, sup);
    }
    rep.monotone_ok = true;
    for (std::size_t k = 1; k < rep.deviations.size(); ++k)
        if (rep.deviations[k].second > 1.1 * rep.deviations[k - 1].second) rep.monotone_ok = false;
    return rep;
}

}  // namespace mahalf
