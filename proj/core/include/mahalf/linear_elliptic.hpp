#pragma once

#include <Eigen/Sparse>
#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "mahalf/field.hpp"
#include "mahalf/grid.hpp"
#include "mahalf/oracles.hpp"
#include "mahalf/types.hpp"

namespace mahalf {

/// Symmetric coefficient matrix field a(x) with ellipticity bounds
/// lambda I <= a <= Lambda I and far-field perturbation |a_ij - delta_ij| <= |x|^{-s}.
struct CoefficientField {
    int dim = 2;
    std::function<Mat(const Vec&)> a;
    double lambda = 1.0;
    double Lambda = 1.0;
    double s = 1.0;
    double inner_radius = 1.0;  // R0 where the perturbation bound starts

    static CoefficientField identity(int dim);
    Mat operator()(const Vec& x) const { return a(x); }

    /// Eigenvalue/symmetry spot check; throws ValidationError on violation.
    void spot_check(const std::vector<Vec>& points) const;
};

/// Seeded admissible perturbation a(x) = clip(I + |x|^{-s} E(x)) with E symmetric,
/// entries bounded by 1/dim; eigenvalues clipped into [lambda, Lambda].
CoefficientField random_admissible_field(std::uint64_t seed, int dim, double lambda, double Lambda,
                                         double s, double inner_radius);

/// Node partition of a half-rectangle grid with a spherical inner exclusion
/// (and optionally an outer one): exterior-domain truncations.
class ExteriorRegion {
public:
    enum class Role : std::uint8_t {
        Excluded,       // inside the inner mask / beyond the outer mask
        Interior,       // equation row
        Bottom,         // x_n = 0, Dirichlet
        Outer,          // rectangle face, Dirichlet
        InnerFrontier,  // active node whose stencil touches the inner mask, Dirichlet
        OuterArc        // active node whose stencil touches the outer mask, Dirichlet
    };

    ExteriorRegion(GridPtr grid, double inner_radius,
                   std::optional<double> outer_radius = std::nullopt);

    const HalfGrid& grid() const { return *grid_; }
    const GridPtr& grid_ptr() const { return grid_; }
    Role role(std::size_t idx) const { return roles_[idx]; }
    const std::vector<Role>& roles() const { return roles_; }
    const std::vector<std::size_t>& interior_nodes() const { return interior_; }
    double inner_radius() const { return inner_radius_; }
    std::optional<double> outer_radius() const { return outer_radius_; }

private:
    GridPtr grid_;
    double inner_radius_;
    std::optional<double> outer_radius_;
    std::vector<Role> roles_;
    std::vector<std::size_t> interior_;
};

/// Dirichlet data per boundary class. outer_arc falls back to outer when unset.
struct RegionData {
    std::function<double(const Vec&)> bottom;
    std::function<double(const Vec&)> outer;
    std::function<double(const Vec&)> inner;
    std::function<double(const Vec&)> outer_arc;

    static RegionData uniform(double value);
    static RegionData from_function(std::function<double(const Vec&)> fn);
};

/// Full-size sparse system: one second-difference row per interior node,
/// identity rows at Dirichlet and excluded nodes.
struct LinearSystem {
    Eigen::SparseMatrix<double> matrix;
};

LinearSystem assemble_nondivergence(const ExteriorRegion& region, const CoefficientField& coeffs);

/// Assemble + sparse LU + relative-residual verification (default 1e-10).
ScalarField solve_linear_dirichlet(const ExteriorRegion& region, const CoefficientField& coeffs,
                                   const RegionData& data, double rel_tol = 1e-10);

struct BarrierSweepPoint {
    double radius = 0.0;
    double max_operator_value = 0.0;  // max over directions of a_ij D_ij w
};

struct BarrierCheckReport {
    double max_over_samples = 0.0;
    bool pass = false;            // max over supplied samples <= 1e-12
    bool sweep_found_radius = false;
    double empirical_inner_radius = 0.0;  // smallest sweep radius that works onward
    std::vector<BarrierSweepPoint> sweep;
};

struct BarrierSweepOptions {
    double r_lo = 1.0;
    double r_hi = 64.0;
    int n_radii = 48;
    int n_angles = 48;
};

/// Evaluates a_ij(x) D_ij w(x) from the closed-form barrier derivatives on the
/// supplied samples (all must satisfy |x| >= spec.inner_radius, x_n > 0) and on
/// a radial sweep that locates the smallest radius where the sign condition
/// holds onward.
BarrierCheckReport barrier_supersolution_check(const CoefficientField& coeffs,
                                               const BarrierSpec& spec,
                                               const std::vector<Vec>& samples,
                                               const BarrierSweepOptions& sweep = {});

struct StrictBoundReport {
    double eps0 = 0.0;          // 1 - max over the middle arc
    double max_middle_arc = 0.0;
    double h = 0.0;
};

/// Dirichlet problem on the annulus R0 <= |x| <= 4 R0: data 1 on both curved
/// boundaries, 1/2 on the bottom; reports eps0 = 1 - max u on |x| = 2 R0.
StrictBoundReport strict_interior_bound_experiment(const CoefficientField& coeffs, double R0,
                                                   double h = 0.0);

struct LimitReport {
    std::vector<std::pair<double, double>> deviations;  // (radius, sup |u - beta|)
    bool monotone_ok = false;                           // each <= 1.1 x previous
};

struct LimitOptions {
    int cells_per_radius = 64;  // grid cells across one schedule radius
    int arc_samples = 128;
};

/// Solves nested exterior truncations (outer face data = beta) and tabulates
/// sup over |x| = r of |u - beta| for each scheduled radius.
LimitReport limit_at_infinity_experiment(const CoefficientField& coeffs, double beta,
                                         const std::vector<double>& schedule,
                                         const std::function<double(const Vec&)>& bottom_data,
                                         const std::function<double(const Vec&)>& inner_data,
                                         const LimitOptions& opts = {});

}  // namespace mahalf
