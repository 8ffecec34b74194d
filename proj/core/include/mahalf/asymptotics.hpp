#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "mahalf/field.hpp"
#include "mahalf/ma_solver.hpp"
#include "mahalf/quadratic.hpp"
#include "mahalf/types.hpp"

namespace mahalf {

enum class DecayMode { Ray, BottomNormalized };

/// Result of a log-log power-law fit |V| ~ C r^p over a radius range.
struct DecayFit {
    DecayMode mode = DecayMode::Ray;
    double exponent = 0.0;
    double constant = 0.0;
    double max_log_dev = 0.0;
    double r_min = 0.0;
    double r_max = 0.0;
    int samples = 0;
    bool underflow = false;   // some |sample| < 1e-14: no trustworthy fit
    bool exact_zero = false;  // every |sample| < 1e-14: exact-residual branch
};

/// Least squares of (1/2) x^T A x + b.x + c over the annulus nodes. With
/// constrain_bottom the restriction to {x_n = 0} is pinned to the polynomial
/// carried by the field's own bottom row, leaving only b_n and the x_n-column
/// of A free. Requires at least 3x as many nodes as free coefficients.
QuadraticData fit_quadratic_asymptote(const ScalarField& field,
                                      const std::vector<std::size_t>& annulus,
                                      bool constrain_bottom);

/// Pointwise field - q.
ScalarField residual_field(const ScalarField& field, const QuadraticData& q);

/// Power-law fit of |V| sampled at r w along a fixed upper direction w
/// (w_n > 0); bilinear interpolation, geometric radii, >= 5 samples.
DecayFit decay_exponent_ray(const ScalarField& V, const Vec& direction, double r_min, double r_max,
                            int n_samples = 9);

/// Power-law fit of V(x', h)/h averaged over |x'| = r (the bottom-normalized
/// profile of the kernel rate).
DecayFit decay_exponent_bottom(const ScalarField& V, double r_min, double r_max,
                               int n_samples = 9);

/// Finite-difference k-th derivative magnitude of field - q along a ray,
/// sampled at the nearest interior nodes; k = 1 or 2 only.
DecayFit derivative_decay(const ScalarField& field, const QuadraticData& q, int k,
                          const Vec& direction, double r_min, double r_max, int n_samples = 9);

/// Sublevel set {u < M}: its nodes plus sub-grid boundary points found by
/// linear interpolation along grid edges crossing the level.
struct SectionPoints {
    std::vector<std::size_t> nodes;
    std::vector<Vec> boundary_points;
};

SectionPoints extract_section(const ScalarField& field, double M);

/// Algebraic least-squares ellipsoid x^T H x = 1 through the points and their
/// reflections across {x_n = 0}. H must come out symmetric positive definite.
Mat ellipsoid_fit(const std::vector<Vec>& boundary_points, int dim);

/// Upper-triangular T with positive diagonal and T^T T = H (so det T = sqrt det H).
Mat lu_normalize(const Mat& H);

struct SandwichReport {
    bool inner_ok = false;
    bool outer_ok = false;
    double inner_margin = 0.0;  // min of (M' - u) over inner-ellipsoid nodes
    double outer_margin = 0.0;  // max of (x^T H x / M - beta^2) over section nodes
    std::size_t inner_nodes = 0;
    std::size_t section_nodes = 0;
};

/// Checks  (2M'/M - slack)^{1/2} E_H  subset  S_{M'}/sqrt(M)  subset
/// (2M'/M + slack)^{1/2} E_H on grid nodes, E_H = {x^T H x <= 1}.
SandwichReport section_sandwich_check(const ScalarField& field, double M, double Mp, const Mat& H,
                                      double slack);

struct NormalizationResult {
    std::vector<double> levels;
    std::vector<Mat> transforms;  // T_k per level, det 1
    std::vector<double> diffs;    // max-abs entry of T_k - T_{k-1}
    int violations = 0;           // diffs[k] > 0.9 diffs[k-1]
    bool decreasing_ok = false;   // at most 2 violations
};

/// Per level: extract section, fit ellipsoid, normalize to det 1, factor into
/// the upper-triangular transform; tabulates successive differences.
NormalizationResult normalization_iteration(const ScalarField& field,
                                            const std::vector<double>& levels);

/// x -> M^2 source(Q x / M); Q upper-triangular with det 1, so the bottom
/// boundary and the open half space are preserved.
std::function<double(const Vec&)> apply_affine_rescale(std::function<double(const Vec&)> source,
                                                       const Mat& Q, double M);

struct XiLevel {
    double M = 0.0;
    double sup_diff = 0.0;       // sup |u_hat - xi| outside B^+_{M^{-1/2}} (rescaled units)
    double grad_quotient = 0.0;  // one-sided |D xi(0)| estimate
    double domain_extent = 0.0;
    double h = 0.0;
};

struct XiReport {
    std::vector<XiLevel> levels;
    double sup_slope = 0.0;   // d log sup_diff / d log M
    double grad_slope = 0.0;  // d log grad_quotient / d log M
};

struct XiOptions {
    double h = 0.125;
    int n_levels = 3;
    double level_ratio = 4.0;
    double domain_margin = 1.2;  // L = margin sqrt(2M), rounded up to a multiple of h
    SolverConfig solver;
};

/// Solves det D^2 u = f, rescales the section S_M, solves the f = 1 comparison
/// problem on the same masked section (level value on the frontier), and
/// tabulates sup |u_hat - xi| and the one-sided derivative quotient at the
/// origin against M over a geometric sequence ending at M_max.
XiReport xi_comparison_experiment(const SourceTerm& f, double M_max, const XiOptions& opts = {});

}  // namespace mahalf
