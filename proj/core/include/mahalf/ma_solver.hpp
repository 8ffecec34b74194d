#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mahalf/errors.hpp"
#include "mahalf/field.hpp"
#include "mahalf/grid.hpp"
#include "mahalf/types.hpp"

namespace mahalf {

/// Right-hand side f >= 0 of det D^2 u = f with support(f - 1) in a compact
/// half-ball B^+_{R0}.
struct SourceTerm {
    std::function<double(const Vec&)> f;
    double support_radius = 0.0;  // R0: f == 1 for |x| > R0
    double lower = 1.0;           // lambda_f <= f (0 allowed: degenerate mode)
    double upper = 1.0;           // f <= Lambda

    static SourceTerm uniform_one();
    /// f = 1 + amplitude inside {|x| < radius, x_n > 0}. amplitude > -1.
    static SourceTerm bump(double amplitude, double radius);

    double operator()(const Vec& x) const { return f(x); }
};

struct SolverConfig {
    double newton_tol = 1e-10;   // residual sup-norm target
    int max_iterations = 60;
    double backtrack_factor = 0.5;
    double min_step = 1e-6;
    double cvx_floor = 1e-8;     // eigenvalue floor inside the linearization
    double linear_rel_tol = 1e-12;
    std::string iteration_log_path;  // per-iteration CSV when non-empty

    void validate() const;
};

/// Central second differences at an interior node: 3-point on the diagonal,
/// 4-point cross stencil off it. Exact on quadratics.
Mat discrete_hessian(const ScalarField& u, std::size_t node);

/// det(discrete Hessian) - f at interior nodes, 0 at boundary nodes.
ScalarField ma_residual(const ScalarField& u, const SourceTerm& f);

/// Spectral projection: eigenvalues clamped below at `floor`, eigenvectors kept.
Mat convexify(const Mat& H, double floor);

struct NewtonRecord {
    int iteration = 0;
    double residual_sup = 0.0;
    double step = 0.0;
};

struct MaSolveResult {
    ScalarField u;
    std::vector<NewtonRecord> history;
    double final_residual = 0.0;
    int iterations = 0;
};

/// Newton stagnated or ran out of iterations; carries the last iterate.
class NewtonError : public Error {
public:
    NewtonError(const std::string& what, ScalarField iterate, std::vector<NewtonRecord> history)
        : Error(what), iterate_(std::move(iterate)), history_(std::move(history)) {}
    const ScalarField& iterate() const { return iterate_; }
    const std::vector<NewtonRecord>& history() const { return history_; }

private:
    ScalarField iterate_;
    std::vector<NewtonRecord> history_;
};

/// Damped Newton for det D^2 u = f with Dirichlet data on bottom and outer
/// nodes. The linearization uses the cofactor matrix of the convexified
/// discrete Hessian; damping backtracks on the residual sup-norm.
///
/// Default start: the quadratic |x|^2/2 plus the harmonic extension of the
/// boundary correction. Throws NewtonError on stagnation (iterate attached).
MaSolveResult solve_ma_dirichlet(GridPtr grid, const SourceTerm& f,
                                 const std::function<double(const Vec&)>& boundary,
                                 const SolverConfig& config = {},
                                 const std::optional<ScalarField>& init = std::nullopt);

/// Node roles for solves on masked subsets of a grid (level-set domains,
/// exterior regions). Excluded nodes never appear in stencils.
enum class NodeRole : std::uint8_t { Unknown = 0, Dirichlet = 1, Excluded = 2 };

struct MaskedProblem {
    GridPtr grid;
    std::vector<NodeRole> role;    // one per node
    std::vector<double> boundary;  // Dirichlet values (read where role == Dirichlet)
};

/// As solve_ma_dirichlet but on an arbitrary masked node set. Every stencil
/// neighbor of an Unknown node must be Unknown or Dirichlet.
MaSolveResult solve_ma_masked(const MaskedProblem& problem, const SourceTerm& f,
                              const SolverConfig& config = {},
                              const std::optional<ScalarField>& init = std::nullopt);

struct ComparisonReport {
    bool leq = true;             // u <= v everywhere?
    std::size_t worst_node = 0;  // argmax of u - v
    double worst_violation = 0.0;
};

/// Nodewise u <= v check with worst offender.
ComparisonReport comparison_check(const ScalarField& u, const ScalarField& v);

struct BottomGradientReport {
    double min_slope = 0.0;
    double max_slope = 0.0;
    double lower_bound = 0.0;  // -(Lambda - 1) - C h
    double upper_bound = 0.0;  // 1 + C h
    bool within = false;
};

/// One-sided vertical difference (u(x',h) - u(x',0))/h at every bottom node,
/// checked against [-(Lambda-1) - C h, 1 + C h] with slack constant C.
BottomGradientReport bottom_gradient_check(const ScalarField& u, double Lambda, double C = 1.0);

}  // namespace mahalf
