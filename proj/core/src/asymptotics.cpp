#include "mahalf/asymptotics.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <string>

#include "mahalf/errors.hpp"
#include "mahalf/oracles.hpp"

namespace mahalf {

namespace {

constexpr double kZeroThreshold = 1e-14;

std::vector<double> geometric_radii(double r_min, double r_max, int n) {
    if (!(r_min > 0.0) || !(r_max > r_min)) throw ArgumentError("decay: need 0 < r_min < r_max");
    if (n < 5) throw ArgumentError("decay: need at least 5 sample radii");
    std::vector<double> r(n);
    for (int i = 0; i < n; ++i)
        r[i] = r_min * std::pow(r_max / r_min, static_cast<double>(i) / (n - 1));
    return r;
}

DecayFit fit_power_law(const std::vector<std::pair<double, double>>& samples, DecayMode mode,
                       double r_min, double r_max) {
    DecayFit fit;
    fit.mode = mode;
    fit.r_min = r_min;
    fit.r_max = r_max;
    fit.samples = static_cast<int>(samples.size());

    int below = 0;
    for (const auto& [r, v] : samples)
        if (v < kZeroThreshold) ++below;
    if (below == fit.samples) {
        fit.exact_zero = true;
        return fit;
    }
    if (below > 0) {
        fit.underflow = true;
        return fit;
    }

    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& [r, v] : samples) {
        const double x = std::log(r), y = std::log(v);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double n = fit.samples;
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double intercept = (sy - slope * sx) / n;
    fit.exponent = slope;
    fit.constant = std::exp(intercept);
    for (const auto& [r, v] : samples)
        fit.max_log_dev =
            std::max(fit.max_log_dev, std::abs(std::log(v) - (intercept + slope * std::log(r))));
    return fit;
}

Vec unit_upper_direction(const Vec& direction, int dim) {
    if (direction.size() != dim) throw ArgumentError("decay: direction/dim mismatch");
    const double norm = direction.norm();
    if (!(norm > 0.0)) throw ArgumentError("decay: zero direction");
    Vec w = direction / norm;
    if (!(w[dim - 1] > 0.0)) throw ArgumentError("decay: ray direction needs a positive x_n part");
    return w;
}

}  // namespace

// ---------------------------------------------------------------------------
// Quadratic asymptote fit

QuadraticData fit_quadratic_asymptote(const ScalarField& field,
                                      const std::vector<std::size_t>& annulus,
                                      bool constrain_bottom) {
    const HalfGrid& g = field.grid();
    const int d = g.dim();

    QuadraticData bottom = QuadraticData::half_norm_squared(d - 1);
    if (constrain_bottom) {
        // The known boundary polynomial: fitted exactly from the bottom row.
        std::vector<std::size_t> bottom_nodes;
        for (std::size_t idx = 0; idx < g.node_count(); ++idx)
            if (g.classify(idx) == NodeClass::Bottom) bottom_nodes.push_back(idx);
        const int nb = (d - 1) * d / 2 + (d - 1) + 1;
        Eigen::MatrixXd D(bottom_nodes.size(), nb);
        Eigen::VectorXd rhs(bottom_nodes.size());
        for (std::size_t r = 0; r < bottom_nodes.size(); ++r) {
            const Vec x = g.position(bottom_nodes[r]);
            int col = 0;
            for (int i = 0; i < d - 1; ++i)
                for (int j = i; j < d - 1; ++j)
                    D(r, col++) = (i == j ? 0.5 : 1.0) * x[i] * x[j];
            for (int i = 0; i < d - 1; ++i) D(r, col++) = x[i];
            D(r, col++) = 1.0;
            rhs[r] = field[bottom_nodes[r]];
        }
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(D);
        if (qr.rank() < nb) throw FitError("degenerate bottom row: cannot pin the boundary polynomial");
        const Eigen::VectorXd theta = qr.solve(rhs);
        int col = 0;
        Mat Ab = Mat::Zero(d - 1, d - 1);
        for (int i = 0; i < d - 1; ++i)
            for (int j = i; j < d - 1; ++j) {
                Ab(i, j) = Ab(j, i) = theta[col++];
            }
        Vec bb(d - 1);
        for (int i = 0; i < d - 1; ++i) bb[i] = theta[col++];
        bottom = QuadraticData(Ab, bb, theta[col]);
    }

    const int n_free = constrain_bottom ? d + 1 : d * (d + 1) / 2 + d + 1;
    if (annulus.size() < static_cast<std::size_t>(3 * n_free))
        throw ArgumentError("asymptote fit: annulus must hold at least 3x the free coefficients");

    Eigen::MatrixXd D(annulus.size(), n_free);
    Eigen::VectorXd rhs(annulus.size());
    for (std::size_t r = 0; r < annulus.size(); ++r) {
        const Vec x = g.position(annulus[r]);
        const double xn = x[d - 1];
        int col = 0;
        if (constrain_bottom) {
            // free: A_{i n} (i < n), A_{nn}, b_n; the rest pinned to the bottom polynomial
            for (int i = 0; i < d - 1; ++i) D(r, col++) = x[i] * xn;
            D(r, col++) = 0.5 * xn * xn;
            D(r, col++) = xn;
            Vec xp = x.head(d - 1);
            rhs[r] = field[annulus[r]] - bottom.eval(xp);
        } else {
            for (int i = 0; i < d; ++i)
                for (int j = i; j < d; ++j) D(r, col++) = (i == j ? 0.5 : 1.0) * x[i] * x[j];
            for (int i = 0; i < d; ++i) D(r, col++) = x[i];
            D(r, col++) = 1.0;
            rhs[r] = field[annulus[r]];
        }
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(D);
    if (qr.rank() < n_free) throw FitError("degenerate annulus: rank-deficient asymptote fit");
    const Eigen::VectorXd theta = qr.solve(rhs);

    Mat A = Mat::Zero(d, d);
    Vec b = Vec::Zero(d);
    double c = 0.0;
    if (constrain_bottom) {
        A.topLeftCorner(d - 1, d - 1) = bottom.A;
        b.head(d - 1) = bottom.b;
        c = bottom.c;
        int col = 0;
        for (int i = 0; i < d - 1; ++i) {
            A(i, d - 1) = A(d - 1, i) = theta[col++];
        }
        A(d - 1, d - 1) = theta[col++];
        b[d - 1] = theta[col];
    } else {
        int col = 0;
        for (int i = 0; i < d; ++i)
            for (int j = i; j < d; ++j) {
                A(i, j) = A(j, i) = theta[col++];
            }
        for (int i = 0; i < d; ++i) b[i] = theta[col++];
        c = theta[col];
    }
    return QuadraticData(A, b, c);
}

ScalarField residual_field(const ScalarField& field, const QuadraticData& q) {
    if (q.dim() != field.grid().dim()) throw ArgumentError("residual: quadratic/grid dim mismatch");
    ScalarField out(field.grid_ptr());
    const HalfGrid& g = field.grid();
    for (std::size_t idx = 0; idx < g.node_count(); ++idx)
        out[idx] = field[idx] - q.eval(g.position(idx));
    return out;
}

// ---------------------------------------------------------------------------
// Decay fits

DecayFit decay_exponent_ray(const ScalarField& V, const Vec& direction, double r_min, double r_max,
                            int n_samples) {
    const int d = V.grid().dim();
    const Vec w = unit_upper_direction(direction, d);
    std::vector<std::pair<double, double>> samples;
    for (double r : geometric_radii(r_min, r_max, n_samples))
        samples.emplace_back(r, std::abs(V.interpolate(Vec(r * w))));
    return fit_power_law(samples, DecayMode::Ray, r_min, r_max);
}

DecayFit decay_exponent_bottom(const ScalarField& V, double r_min, double r_max, int n_samples) {
    const HalfGrid& g = V.grid();
    const int d = g.dim();
    const double h = g.spacing();
    std::vector<std::pair<double, double>> samples;
    for (double r : geometric_radii(r_min, r_max, n_samples)) {
        double acc = 0.0;
        int count = 0;
        if (d == 2) {
            for (double sgn : {-1.0, 1.0}) {
                acc += std::abs(V.interpolate(make_point(sgn * r, h))) / h;
                ++count;
            }
        } else {
            const int n_az = 16;
            for (int q = 0; q < n_az; ++q) {
                const double az = 2.0 * M_PI * q / n_az;
                acc += std::abs(V.interpolate(make_point(r * std::cos(az), r * std::sin(az), h))) / h;
                ++count;
            }
        }
        samples.emplace_back(r, acc / count);
    }
    return fit_power_law(samples, DecayMode::BottomNormalized, r_min, r_max);
}

DecayFit derivative_decay(const ScalarField& field, const QuadraticData& q, int k,
                          const Vec& direction, double r_min, double r_max, int n_samples) {
    if (k != 1 && k != 2)
        throw ArgumentError("derivative decay: only k = 1 and k = 2 are measurable on these grids");
    const HalfGrid& g = field.grid();
    const int d = g.dim();
    const Vec w = unit_upper_direction(direction, d);
    const ScalarField V = residual_field(field, q);
    const double h = g.spacing();

    std::ptrdiff_t off[3] = {1, g.lateral_nodes(),
                             static_cast<std::ptrdiff_t>(g.lateral_nodes()) * g.lateral_nodes()};
    if (d == 2) off[2] = 0;

    std::vector<std::pair<double, double>> samples;
    std::size_t last_node = static_cast<std::size_t>(-1);
    for (double r : geometric_radii(r_min, r_max, n_samples)) {
        const std::size_t node = nearest_node(g, Vec(r * w));
        if (node == last_node) continue;
        if (g.classify(node) != NodeClass::Interior) continue;
        last_node = node;
        double mag = 0.0;
        if (k == 1) {
            double acc = 0.0;
            for (int ax = 0; ax < d; ++ax) {
                const double da = (V[node + off[ax]] - V[node - off[ax]]) / (2.0 * h);
                acc += da * da;
            }
            mag = std::sqrt(acc);
        } else {
            mag = discrete_hessian(V, node).norm();
        }
        samples.emplace_back(g.position(node).norm(), mag);
    }
    if (samples.size() < 5)
        throw ArgumentError("derivative decay: fewer than 5 distinct interior sample nodes");
    return fit_power_law(samples, DecayMode::Ray, r_min, r_max);
}

// ---------------------------------------------------------------------------
// Sections and normalization

SectionPoints extract_section(const ScalarField& field, double M) {
    const HalfGrid& g = field.grid();
    SectionPoints section;
    for (std::size_t idx = 0; idx < g.node_count(); ++idx)
        if (field[idx] < M) section.nodes.push_back(idx);
    if (section.nodes.empty())
        throw SectionError("empty section: level " + std::to_string(M) + " at or below the minimum");

    std::ptrdiff_t off[3] = {1, g.lateral_nodes(),
                             static_cast<std::ptrdiff_t>(g.lateral_nodes()) * g.lateral_nodes()};
    for (std::size_t idx = 0; idx < g.node_count(); ++idx) {
        const auto mi = g.multi_index(idx);
        for (int ax = 0; ax < g.dim(); ++ax) {
            int i = mi[0], j = mi[1], k = mi[2];
            (ax == 0 ? i : ax == 1 ? j : k) += 1;
            if (!g.in_bounds(i, j, k)) continue;
            const double u0 = field[idx];
            const double u1 = field[idx + off[ax]];
            if ((u0 < M) == (u1 < M)) continue;
            const double t = (M - u0) / (u1 - u0);
            Vec p = g.position(idx);
            p[ax] += t * g.spacing();
            section.boundary_points.push_back(p);
        }
    }
    return section;
}

Mat ellipsoid_fit(const std::vector<Vec>& boundary_points, int dim) {
    const int n_coef = dim * (dim + 1) / 2;
    if (boundary_points.size() < static_cast<std::size_t>(n_coef))
        throw SectionError("ellipsoid fit needs at least dim(dim+1)/2 boundary points");

    // Reflect across {x_n = 0} before fitting.
    std::vector<Vec> pts;
    pts.reserve(2 * boundary_points.size());
    for (const Vec& p : boundary_points) {
        pts.push_back(p);
        Vec q = p;
        q[dim - 1] = -q[dim - 1];
        pts.push_back(q);
    }

    Eigen::MatrixXd D(pts.size(), n_coef);
    Eigen::VectorXd rhs = Eigen::VectorXd::Ones(pts.size());
    for (std::size_t r = 0; r < pts.size(); ++r) {
        int col = 0;
        for (int i = 0; i < dim; ++i)
            for (int j = i; j < dim; ++j)
                D(r, col++) = (i == j ? 1.0 : 2.0) * pts[r][i] * pts[r][j];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(D);
    if (qr.rank() < n_coef) throw SectionError("degenerate section: rank-deficient ellipsoid fit");
    const Eigen::VectorXd theta = qr.solve(rhs);

    Mat H(dim, dim);
    int col = 0;
    for (int i = 0; i < dim; ++i)
        for (int j = i; j < dim; ++j) {
            H(i, j) = H(j, i) = theta[col++];
        }
    Eigen::SelfAdjointEigenSolver<Mat> eig(H);
    if (eig.eigenvalues().minCoeff() <= 0.0)
        throw SectionError("degenerate section: indefinite ellipsoid fit");
    return H;
}

Mat lu_normalize(const Mat& H) {
    if (H.rows() != H.cols()) throw ArgumentError("lu_normalize: H must be square");
    if (!H.isApprox(H.transpose(), 1e-10)) throw FactorizationError("lu_normalize: H not symmetric");
    Eigen::LLT<Mat> llt(H);
    if (llt.info() != Eigen::Success)
        throw FactorizationError("lu_normalize: H is not positive definite");
    return Mat(llt.matrixU());
}

SandwichReport section_sandwich_check(const ScalarField& field, double M, double Mp, const Mat& H,
                                      double slack) {
    if (!(Mp > 0.0) || !(M >= Mp)) throw ArgumentError("sandwich: need M >= M' > 0");
    Eigen::LLT<Mat> llt(H);
    if (llt.info() != Eigen::Success) throw ArgumentError("sandwich: H must be SPD");

    const HalfGrid& g = field.grid();
    const double ratio = 2.0 * Mp / M;
    const double alpha2 = ratio - slack;
    const double beta2 = ratio + slack;

    SandwichReport rep;
    rep.inner_margin = std::numeric_limits<double>::infinity();
    rep.outer_margin = -std::numeric_limits<double>::infinity();
    for (std::size_t idx = 0; idx < g.node_count(); ++idx) {
        const Vec x = g.position(idx);
        const double quad = x.dot(H * x) / M;  // (x/sqrt(M))^T H (x/sqrt(M))
        if (quad <= alpha2) {
            ++rep.inner_nodes;
            rep.inner_margin = std::min(rep.inner_margin, Mp - field[idx]);
        }
        if (field[idx] < Mp) {
            ++rep.section_nodes;
            rep.outer_margin = std::max(rep.outer_margin, quad - beta2);
        }
    }
    rep.inner_ok = rep.inner_nodes == 0 || rep.inner_margin > 0.0;
    rep.outer_ok = rep.section_nodes == 0 || rep.outer_margin <= 0.0;
    return rep;
}

NormalizationResult normalization_iteration(const ScalarField& field,
                                            const std::vector<double>& levels) {
    if (levels.empty() || !std::is_sorted(levels.begin(), levels.end()))
        throw ArgumentError("normalization: levels must be increasing");
    NormalizationResult out;
    out.levels = levels;
    const int d = field.grid().dim();
    for (std::size_t k = 0; k < levels.size(); ++k) {
        try {
            const SectionPoints section = extract_section(field, levels[k]);
            Mat H = ellipsoid_fit(section.boundary_points, d);
            H /= std::pow(H.determinant(), 1.0 / d);
            out.transforms.push_back(lu_normalize(H));
        } catch (const Error& e) {
            throw SectionError("normalization level " + std::to_string(k) + " (M = " +
                               std::to_string(levels[k]) + "): " + e.what());
        }
        if (k > 0)
            out.diffs.push_back(
                (out.transforms[k] - out.transforms[k - 1]).cwiseAbs().maxCoeff());
    }
    for (std::size_t k = 1; k < out.diffs.size(); ++k)
        if (out.diffs[k] > 0.9 * out.diffs[k - 1]) ++out.violations;
    out.decreasing_ok = out.violations <= 2;
    return out;
}

std::function<double(const Vec&)> apply_affine_rescale(std::function<double(const Vec&)> source,
                                                       const Mat& Q, double M) {
    if (Q.rows() != Q.cols()) throw ValidationError("affine rescale: Q must be square");
    for (int i = 0; i < Q.rows(); ++i)
        for (int j = 0; j < i; ++j)
            if (std::abs(Q(i, j)) > 1e-12)
                throw ValidationError("affine rescale: Q must be upper-triangular");
    if (std::abs(Q.determinant() - 1.0) > 1e-10)
        throw ValidationError("affine rescale: |det Q - 1| must be <= 1e-10");
    if (!(M > 0.0)) throw ValidationError("affine rescale: M must be positive");
    Mat Qc = Q;
    return [source = std::move(source), Qc, M](const Vec& x) {
        return M * M * source(Vec(Qc * x / M));
    };
}

// ---------------------------------------------------------------------------
// Section comparison scaling study

namespace {

struct MaskedSection {
    MaskedProblem problem;
    std::vector<std::size_t> unknowns;
};

MaskedSection build_section_problem(const ScalarField& u, double M) {
    const HalfGrid& g = u.grid();
    MaskedSection out;
    out.problem.grid = u.grid_ptr();
    out.problem.role.assign(g.node_count(), NodeRole::Excluded);
    out.problem.boundary.assign(g.node_count(), 0.0);

    std::vector<char> active(g.node_count(), 0);
    for (std::size_t idx = 0; idx < g.node_count(); ++idx) active[idx] = u[idx] < M ? 1 : 0;

    std::vector<std::array<int, 3>> offs;
    const int d = g.dim();
    for (int a = 0; a < d; ++a)
        for (int s : {-1, 1}) {
            std::array<int, 3> o{0, 0, 0};
            o[a] = s;
            offs.push_back(o);
        }
    for (int a = 0; a < d; ++a)
        for (int b = a + 1; b < d; ++b)
            for (int sa : {-1, 1})
                for (int sb : {-1, 1}) {
                    std::array<int, 3> o{0, 0, 0};
                    o[a] = sa;
                    o[b] = sb;
                    offs.push_back(o);
                }

    for (std::size_t idx = 0; idx < g.node_count(); ++idx) {
        const auto mi = g.multi_index(idx);
        if (active[idx]) {
            const NodeClass cls = g.classify(idx);
            if (cls == NodeClass::Outer)
                throw ArgumentError("section touches the computational boundary; enlarge the domain");
            if (cls == NodeClass::Bottom) {
                out.problem.role[idx] = NodeRole::Dirichlet;
                out.problem.boundary[idx] = u[idx];
            } else {
                out.problem.role[idx] = NodeRole::Unknown;
                out.unknowns.push_back(idx);
            }
            continue;
        }
        bool frontier = false;
        for (const auto& o : offs) {
            const int i = mi[0] + o[0], j = mi[1] + o[1], k = mi[2] + o[2];
            if (g.in_bounds(i, j, k) && active[g.flat_index(i, j, k)]) {
                frontier = true;
                break;
            }
        }
        if (frontier) {
            out.problem.role[idx] = NodeRole::Dirichlet;
            out.problem.boundary[idx] = M;  // the level value, as on the exact level set
        }
    }
    return out;
}

}  // namespace

XiReport xi_comparison_experiment(const SourceTerm& f, double M_max, const XiOptions& opts) {
    if (!(M_max >= 4.0)) throw ArgumentError("xi experiment: M must be at least 4");
    if (opts.n_levels < 1) throw ArgumentError("xi experiment: need at least one level");

    std::vector<double> levels;
    for (int k = opts.n_levels - 1; k >= 0; --k)
        levels.push_back(M_max / std::pow(opts.level_ratio, k));
    if (levels.front() < 4.0) throw ArgumentError("xi experiment: smallest level fell below 4");

    XiReport rep;
    const int dim = 2;
    for (double M : levels) {
        const double want = opts.domain_margin * std::sqrt(2.0 * M);
        const double L = std::ceil(want / opts.h) * opts.h;
        auto grid = std::make_shared<HalfGrid>(dim, L, L, opts.h);

        const QuadraticData q = QuadraticData::half_norm_squared(dim);
        const auto data = [&q](const Vec& x) { return q.eval(x); };
        const ScalarField start = ScalarField::sample(grid, data);
        const MaSolveResult solved = solve_ma_dirichlet(grid, f, data, opts.solver, start);

        MaskedSection section = build_section_problem(solved.u, M);
        const MaSolveResult xi =
            solve_ma_masked(section.problem, SourceTerm::uniform_one(), opts.solver, solved.u);

        XiLevel level;
        level.M = M;
        level.domain_extent = L;
        level.h = opts.h;
        for (std::size_t idx : section.unknowns) {
            if (grid->position(idx).norm() < 1.0) continue;  // |x_hat| >= M^{-1/2} rescaled
            level.sup_diff = std::max(level.sup_diff, std::abs(solved.u[idx] - xi.u[idx]) / M);
        }

        // One-sided derivative quotient at the origin over the height where
        // u reaches sqrt(M) (the section of the rescaled level M^{-1/2}).
        const double target = std::sqrt(M);
        const int i0 = (grid->lateral_nodes() - 1) / 2;
        int j = 1;
        while (j < grid->vertical_nodes() &&
               solved.u[grid->flat_index(i0, j)] < target)
            ++j;
        if (j >= grid->vertical_nodes())
            throw ArgumentError("xi experiment: sqrt(M) level not reached on the axis");
        const double u_lo = solved.u[grid->flat_index(i0, j - 1)];
        const double u_hi = solved.u[grid->flat_index(i0, j)];
        const double frac = (target - u_lo) / (u_hi - u_lo);
        const double t_star = (j - 1 + frac) * opts.h;
        const double xi_lo = xi.u[grid->flat_index(i0, j - 1)];
        const double xi_hi = xi.u[grid->flat_index(i0, j)];
        const double xi_at = xi_lo + frac * (xi_hi - xi_lo);
        level.grad_quotient = std::abs(xi_at / (std::sqrt(M) * t_star));

        rep.levels.push_back(level);
    }

    if (rep.levels.size() >= 2) {
        double sx = 0, sy1 = 0, sy2 = 0, sxx = 0, sxy1 = 0, sxy2 = 0;
        const double n = rep.levels.size();
        for (const XiLevel& l : rep.levels) {
            const double x = std::log(l.M);
            sx += x;
            sxx += x * x;
            sy1 += std::log(std::max(l.sup_diff, 1e-300));
            sxy1 += x * std::log(std::max(l.sup_diff, 1e-300));
            sy2 += std::log(std::max(l.grad_quotient, 1e-300));
            sxy2 += x * std::log(std::max(l.grad_quotient, 1e-300));
        }
        rep.sup_slope = (n * sxy1 - sx * sy1) / (n * sxx - sx * sx);
        rep.grad_slope = (n * sxy2 - sx * sy2) / (n * sxx - sx * sx);
    }
    return rep;
}

}  // namespace mahalf
