#include "mahalf/ma_solver.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>

#include "mahalf/errors.hpp"

namespace mahalf {

void SolverConfig::validate() const {
    if (!(newton_tol > 0.0 && newton_tol < 1.0)) throw ConfigError("newton_tol: must be in (0, 1)");
    if (max_iterations <= 0) throw ConfigError("max_iterations: must be positive");
    if (!(backtrack_factor > 0.0 && backtrack_factor < 1.0))
        throw ConfigError("backtrack_factor: must be in (0, 1)");
    if (!(min_step > 0.0)) throw ConfigError("min_step: must be positive");
    if (!(cvx_floor > 0.0)) throw ConfigError("cvx_floor: must be positive");
    if (!(linear_rel_tol > 0.0)) throw ConfigError("linear_rel_tol: must be positive");
}

SourceTerm SourceTerm::uniform_one() {
    SourceTerm t;
    t.f = [](const Vec&) { return 1.0; };
    t.support_radius = 0.0;
    t.lower = t.upper = 1.0;
    return t;
}

SourceTerm SourceTerm::bump(double amplitude, double radius) {
    if (amplitude <= -1.0) throw ValidationError("bump: amplitude must exceed -1 (f >= 0)");
    if (!(radius > 0.0)) throw ValidationError("bump: radius must be positive");
    SourceTerm t;
    t.f = [amplitude, radius](const Vec& x) {
        const double xn = x[x.size() - 1];
        return (xn > 0.0 && x.norm() < radius) ? 1.0 + amplitude : 1.0;
    };
    t.support_radius = radius;
    t.lower = std::min(1.0, 1.0 + amplitude);
    t.upper = std::max(1.0, 1.0 + amplitude);
    return t;
}

namespace {

Mat adjugate(const Mat& H) {
    const int n = static_cast<int>(H.rows());
    Mat adj(n, n);
    if (n == 2) {
        adj(0, 0) = H(1, 1);
        adj(1, 1) = H(0, 0);
        adj(0, 1) = adj(1, 0) = -H(0, 1);
    } else {
        const double a = H(0, 0), b = H(0, 1), c = H(0, 2);
        const double d = H(1, 1), e = H(1, 2), f = H(2, 2);
        adj(0, 0) = d * f - e * e;
        adj(1, 1) = a * f - c * c;
        adj(2, 2) = a * d - b * b;
        adj(0, 1) = adj(1, 0) = c * e - b * f;
        adj(0, 2) = adj(2, 0) = b * e - c * d;
        adj(1, 2) = adj(2, 1) = c * b - a * e;
    }
    return adj;
}

// Per-grid constant flat-index offsets of the stencil axes.
struct Layout {
    int dim;
    double h;
    std::ptrdiff_t off[3];
};

Layout layout_of(const HalfGrid& g) {
    Layout l{};
    l.dim = g.dim();
    l.h = g.spacing();
    l.off[0] = 1;
    l.off[1] = g.lateral_nodes();
    l.off[2] = static_cast<std::ptrdiff_t>(g.lateral_nodes()) * g.lateral_nodes();
    if (l.dim == 2) l.off[2] = 0;
    return l;
}

Mat hessian_at(const std::vector<double>& v, std::size_t idx, const Layout& l) {
    const double inv_h2 = 1.0 / (l.h * l.h);
    Mat H(l.dim, l.dim);
    for (int a = 0; a < l.dim; ++a) {
        const std::ptrdiff_t oa = l.off[a];
        H(a, a) = (v[idx + oa] - 2.0 * v[idx] + v[idx - oa]) * inv_h2;
        for (int b = a + 1; b < l.dim; ++b) {
            const std::ptrdiff_t ob = l.off[b];
            const double cross =
                (v[idx + oa + ob] - v[idx + oa - ob] - v[idx - oa + ob] + v[idx - oa - ob]) *
                0.25 * inv_h2;
            H(a, b) = H(b, a) = cross;
        }
    }
    return H;
}

struct Problem {
    GridPtr grid;
    Layout layout;
    std::vector<NodeRole> role;
    std::vector<double> dirichlet;              // values where role == Dirichlet
    std::vector<std::size_t> unknowns;          // node indices of unknowns
    std::vector<std::ptrdiff_t> unknown_index;  // node -> row, -1 otherwise
    std::vector<double> f_at_unknown;
};

// All lattice offsets touched by the second-difference stencils.
std::vector<std::array<int, 3>> stencil_offsets(int dim) {
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

// Every stencil neighbor of an unknown must exist and must not be excluded.
void validate_stencils(const Problem& p) {
    const HalfGrid& g = *p.grid;
    const auto offs = stencil_offsets(p.layout.dim);
    for (std::size_t node : p.unknowns) {
        const auto mi = g.multi_index(node);
        for (const auto& o : offs) {
            const int i = mi[0] + o[0], j = mi[1] + o[1], k = mi[2] + o[2];
            if (!g.in_bounds(i, j, k))
                throw StencilError("stencil of unknown node " + std::to_string(node) +
                                   " leaves the grid");
            if (p.role[g.flat_index(i, j, k)] == NodeRole::Excluded)
                throw StencilError("stencil of unknown node " + std::to_string(node) +
                                   " touches an excluded node");
        }
    }
}

double residual_sup(const Problem& p, const std::vector<double>& v) {
    double sup = 0.0;
    for (std::size_t r = 0; r < p.unknowns.size(); ++r) {
        const Mat H = hessian_at(v, p.unknowns[r], p.layout);
        const double res = H.determinant() - p.f_at_unknown[r];
        sup = std::max(sup, std::abs(res));
    }
    return sup;
}

void write_iteration_log(const std::string& path, const std::vector<NewtonRecord>& history) {
    std::ofstream out(path);
    out << "iteration,residual_sup,step\n";
    for (const auto& rec : history)
        out << rec.iteration << ',' << rec.residual_sup << ',' << rec.step << '\n';
}

MaSolveResult newton_solve(const Problem& p, const SolverConfig& config,
                           std::vector<double> values) {
    const std::size_t n = p.unknowns.size();
    const double h2 = p.layout.h * p.layout.h;
    const int dim = p.layout.dim;

    Eigen::SparseMatrix<double> J(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    Eigen::VectorXd rhs(n), delta(n);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(n * (dim == 2 ? 9 : 19));
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    bool analyzed = false;

    std::vector<NewtonRecord> history;
    std::vector<double> trial(values.size());

    const auto make_field = [&](const std::vector<double>& vals) {
        ScalarField f(p.grid);
        f.values() = vals;
        return f;
    };

    double res = residual_sup(p, values);
    for (int iter = 0; iter < config.max_iterations; ++iter) {
        if (res <= config.newton_tol) {
            history.push_back({iter, res, 0.0});
            if (!config.iteration_log_path.empty())
                write_iteration_log(config.iteration_log_path, history);
            MaSolveResult out{make_field(values), std::move(history), res, iter};
            return out;
        }

        trip.clear();
        for (std::size_t r = 0; r < n; ++r) {
            const std::size_t node = p.unknowns[r];
            const Mat H = hessian_at(values, node, p.layout);
            rhs[static_cast<Eigen::Index>(r)] = -(H.determinant() - p.f_at_unknown[r]);
            const Mat a = adjugate(convexify(H, config.cvx_floor));

            double center = 0.0;
            for (int ax = 0; ax < dim; ++ax) center -= 2.0 * a(ax, ax);
            trip.emplace_back(static_cast<int>(r), static_cast<int>(r), center / h2);

            const auto add = [&](std::ptrdiff_t off, double coeff) {
                const std::ptrdiff_t col = p.unknown_index[node + off];
                if (col >= 0) trip.emplace_back(static_cast<int>(r), static_cast<int>(col), coeff);
            };
            for (int ax = 0; ax < dim; ++ax) {
                add(p.layout.off[ax], a(ax, ax) / h2);
                add(-p.layout.off[ax], a(ax, ax) / h2);
            }
            for (int ax = 0; ax < dim; ++ax)
                for (int bx = ax + 1; bx < dim; ++bx) {
                    const double w = a(ax, bx) / (2.0 * h2);
                    add(p.layout.off[ax] + p.layout.off[bx], w);
                    add(-p.layout.off[ax] - p.layout.off[bx], w);
                    add(p.layout.off[ax] - p.layout.off[bx], -w);
                    add(-p.layout.off[ax] + p.layout.off[bx], -w);
                }
        }
        J.setZero();
        J.setFromTriplets(trip.begin(), trip.end());
        if (!analyzed) {
            lu.analyzePattern(J);
            analyzed = true;
        }
        lu.factorize(J);
        if (lu.info() != Eigen::Success)
            throw LinearSolverError("Newton linearization factorization failed", 1.0);
        delta = lu.solve(rhs);
        const double rel =
            (J * delta - rhs).norm() / std::max(rhs.norm(), 1e-300);
        if (rel > config.linear_rel_tol)
            throw LinearSolverError("Newton linear solve above tolerance", rel);

        // Backtracking on the residual sup-norm; exact ties prefer the smaller step.
        double alpha = 1.0;
        double accepted = -1.0, res_next = res;
        while (alpha >= config.min_step) {
            trial = values;
            for (std::size_t r = 0; r < n; ++r)
                trial[p.unknowns[r]] += alpha * delta[static_cast<Eigen::Index>(r)];
            const double res_trial = residual_sup(p, trial);
            if (std::isfinite(res_trial) && res_trial < res) {
                accepted = alpha;
                res_next = res_trial;
                values = trial;
                break;
            }
            alpha *= config.backtrack_factor;
        }
        if (accepted < 0.0) {
            history.push_back({iter, res, 0.0});
            if (!config.iteration_log_path.empty())
                write_iteration_log(config.iteration_log_path, history);
            throw NewtonError("Newton stagnated: step below min_step without residual decrease",
                              make_field(values), history);
        }
        history.push_back({iter, res, accepted});
        res = res_next;
    }
    if (!config.iteration_log_path.empty()) write_iteration_log(config.iteration_log_path, history);
    throw NewtonError("Newton did not converge within max_iterations", make_field(values),
                      history);
}

// Harmonic extension of (g - |x|^2/2) from the Dirichlet nodes, added to |x|^2/2.
std::vector<double> default_start(const Problem& p) {
    const HalfGrid& g = *p.grid;
    const std::size_t n = p.unknowns.size();
    const double inv_h2 = 1.0 / (p.layout.h * p.layout.h);

    std::vector<double> correction(g.node_count(), 0.0);
    for (std::size_t idx = 0; idx < g.node_count(); ++idx)
        if (p.role[idx] == NodeRole::Dirichlet)
            correction[idx] = p.dirichlet[idx] - 0.5 * g.position(idx).squaredNorm();

    Eigen::SparseMatrix<double> A(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(n * (2 * p.layout.dim + 1));
    for (std::size_t r = 0; r < n; ++r) {
        const std::size_t node = p.unknowns[r];
        trip.emplace_back(static_cast<int>(r), static_cast<int>(r), -2.0 * p.layout.dim * inv_h2);
        for (int ax = 0; ax < p.layout.dim; ++ax)
            for (int sign : {-1, 1}) {
                const std::size_t nb = node + sign * p.layout.off[ax];
                const std::ptrdiff_t col = p.unknown_index[nb];
                if (col >= 0)
                    trip.emplace_back(static_cast<int>(r), static_cast<int>(col), inv_h2);
                else
                    rhs[static_cast<Eigen::Index>(r)] -= inv_h2 * correction[nb];
            }
    }
    A.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(A);
    if (lu.info() != Eigen::Success)
        throw LinearSolverError("default start: Laplace factorization failed", 1.0);
    const Eigen::VectorXd ext = lu.solve(rhs);

    std::vector<double> values(g.node_count(), 0.0);
    for (std::size_t idx = 0; idx < g.node_count(); ++idx) {
        if (p.role[idx] == NodeRole::Dirichlet)
            values[idx] = p.dirichlet[idx];
        else if (p.role[idx] == NodeRole::Unknown)
            values[idx] = 0.5 * g.position(idx).squaredNorm();
    }
    for (std::size_t r = 0; r < n; ++r)
        values[p.unknowns[r]] += ext[static_cast<Eigen::Index>(r)];
    return values;
}

Problem build_problem(GridPtr grid, std::vector<NodeRole> role, std::vector<double> dirichlet,
                      const SourceTerm& f) {
    Problem p;
    p.grid = std::move(grid);
    p.layout = layout_of(*p.grid);
    p.role = std::move(role);
    p.dirichlet = std::move(dirichlet);
    p.unknown_index.assign(p.grid->node_count(), -1);
    for (std::size_t idx = 0; idx < p.grid->node_count(); ++idx)
        if (p.role[idx] == NodeRole::Unknown) {
            p.unknown_index[idx] = static_cast<std::ptrdiff_t>(p.unknowns.size());
            p.unknowns.push_back(idx);
        }
    if (p.unknowns.empty()) throw ArgumentError("problem has no unknowns");
    validate_stencils(p);
    p.f_at_unknown.resize(p.unknowns.size());
    for (std::size_t r = 0; r < p.unknowns.size(); ++r) {
        const double fv = f(p.grid->position(p.unknowns[r]));
        if (fv < 0.0)
            throw ValidationError("source term is negative at node " +
                                  std::to_string(p.unknowns[r]));
        p.f_at_unknown[r] = fv;
    }
    return p;
}

MaSolveResult run(Problem p, const SolverConfig& config, const std::optional<ScalarField>& init) {
    config.validate();
    std::vector<double> values;
    if (init) {
        if (!init->grid().same_layout(*p.grid))
            throw ArgumentError("init field lives on a different grid");
        values = init->values();
        for (std::size_t idx = 0; idx < p.grid->node_count(); ++idx)
            if (p.role[idx] == NodeRole::Dirichlet) values[idx] = p.dirichlet[idx];
    } else {
        values = default_start(p);
    }
    return newton_solve(p, config, std::move(values));
}

}  // namespace

Mat discrete_hessian(const ScalarField& u, std::size_t node) {
    const HalfGrid& g = u.grid();
    if (g.classify(node) != NodeClass::Interior)
        throw StencilError("discrete_hessian: node " + std::to_string(node) + " is not interior");
    return hessian_at(u.values(), node, layout_of(g));
}

ScalarField ma_residual(const ScalarField& u, const SourceTerm& f) {
    const HalfGrid& g = u.grid();
    const Layout l = layout_of(g);
    ScalarField res(u.grid_ptr(), 0.0);
    for (std::size_t idx = 0; idx < g.node_count(); ++idx) {
        if (g.classify(idx) != NodeClass::Interior) continue;
        const Mat H = hessian_at(u.values(), idx, l);
        res[idx] = H.determinant() - f(g.position(idx));
    }
    return res;
}

Mat convexify(const Mat& H, double floor) {
    if (!H.isApprox(H.transpose(), 1e-10)) throw ArgumentError("convexify: H must be symmetric");
    Eigen::SelfAdjointEigenSolver<Mat> eig(H);
    Vec lam = eig.eigenvalues();
    bool touched = false;
    for (int i = 0; i < lam.size(); ++i)
        if (lam[i] < floor) {
            lam[i] = floor;
            touched = true;
        }
    if (!touched) return H;
    return eig.eigenvectors() * lam.asDiagonal() * eig.eigenvectors().transpose();
}

MaSolveResult solve_ma_dirichlet(GridPtr grid, const SourceTerm& f,
                                 const std::function<double(const Vec&)>& boundary,
                                 const SolverConfig& config,
                                 const std::optional<ScalarField>& init) {
    std::vector<NodeRole> role(grid->node_count(), NodeRole::Unknown);
    std::vector<double> data(grid->node_count(), 0.0);
    for (std::size_t idx = 0; idx < grid->node_count(); ++idx)
        if (grid->classify(idx) != NodeClass::Interior) {
            role[idx] = NodeRole::Dirichlet;
            data[idx] = boundary(grid->position(idx));
        }
    return run(build_problem(std::move(grid), std::move(role), std::move(data), f), config, init);
}

MaSolveResult solve_ma_masked(const MaskedProblem& problem, const SourceTerm& f,
                              const SolverConfig& config, const std::optional<ScalarField>& init) {
    if (problem.role.size() != problem.grid->node_count() ||
        problem.boundary.size() != problem.grid->node_count())
        throw ArgumentError("masked problem: role/boundary size mismatch");
    return run(build_problem(problem.grid, problem.role, problem.boundary, f), config, init);
}

ComparisonReport comparison_check(const ScalarField& u, const ScalarField& v) {
    if (!u.grid().same_layout(v.grid())) throw ArgumentError("comparison: grid mismatch");
    ComparisonReport rep;
    rep.worst_violation = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double gap = u[i] - v[i];
        if (gap > rep.worst_violation) {
            rep.worst_violation = gap;
            rep.worst_node = i;
        }
    }
    rep.leq = rep.worst_violation <= 0.0;
    return rep;
}

BottomGradientReport bottom_gradient_check(const ScalarField& u, double Lambda, double C) {
    const HalfGrid& g = u.grid();
    const Layout l = layout_of(g);
    BottomGradientReport rep;
    rep.min_slope = std::numeric_limits<double>::infinity();
    rep.max_slope = -std::numeric_limits<double>::infinity();
    for (std::size_t idx = 0; idx < g.node_count(); ++idx) {
        if (g.classify(idx) != NodeClass::Bottom) continue;
        const double slope = (u[idx + l.off[l.dim - 1]] - u[idx]) / l.h;
        rep.min_slope = std::min(rep.min_slope, slope);
        rep.max_slope = std::max(rep.max_slope, slope);
    }
    rep.lower_bound = -(Lambda - 1.0) - C * l.h;
    rep.upper_bound = 1.0 + C * l.h;
    rep.within = rep.min_slope >= rep.lower_bound && rep.max_slope <= rep.upper_bound;
    return rep;
}

}  // namespace mahalf
