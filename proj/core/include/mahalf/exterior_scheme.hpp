#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mahalf/asymptotics.hpp"
#include "mahalf/field.hpp"
#include "mahalf/ma_solver.hpp"
#include "mahalf/quadratic.hpp"

namespace mahalf {

/// Dirichlet data of the radius-R truncated problem: q(x) + b_n x_n on outer
/// nodes and the compatible bottom restriction (the same formula) on the bottom.
std::function<double(const Vec&)> truncation_boundary_data(const QuadraticData& q, double b_n,
                                                           double R);

/// How the linear x_n-correction of the truncation data is chosen.
struct BnMode {
    bool two_pass = false;
    double fixed_value = 0.0;

    static BnMode fixed(double v) { return {false, v}; }
    static BnMode estimate_two_pass() { return {true, 0.0}; }
};

struct ScheduleOptions {
    int dim = 2;
    int cells_per_radius = 256;       // h = R / cells_per_radius at every radius
    double fit_inner_frac = 0.5;      // two-pass estimation annulus [aR, bR]
    double fit_outer_frac = 0.75;
    double compact_radius = 2.0;      // K = B_2^+ for the local-deviation table
    double bounds_slack_factor = 10.0;  // nodewise sandwich slack = factor h^2
    SolverConfig solver;
};

struct ScheduleEntry {
    double radius = 0.0;
    double h = 0.0;
    ScalarField u;        // solved field (includes the b_n x_n correction)
    double bn_used = 0.0;
    bool converged = false;
    bool bounds_ok = false;
    double worst_lower = 0.0;  // positive = violation of the lower sandwich bound
    double worst_upper = 0.0;
    std::string error;
};

struct ScheduleResult {
    std::vector<ScheduleEntry> entries;
    std::vector<double> deviations;  // sup over K of |u_{j+1} - u_j| per consecutive pair
    double b_n = 0.0;
    bool all_converged = false;
    bool all_bounds_ok = false;
};

/// Solves the truncated Dirichlet problems on an expanding radius schedule.
/// In two-pass mode, b_n is fitted on the smallest domain and reused
/// (boundary data changed by an affine term shifts the solve exactly, so the
/// first field is corrected in place). The sandwich bounds are always checked
/// on the data-consistent field u - b_n x_n.
ScheduleResult expanding_domain_solve(const SourceTerm& f, const QuadraticData& q,
                                      const std::vector<double>& radii, const BnMode& mode,
                                      const ScheduleOptions& opts = {});

struct LiouvilleReport {
    double sup_deviation = 0.0;
    double tolerance = 0.0;  // 10x the Newton tolerance
    bool pass = false;
};

/// Solves det D^2 u = 1 with quadratic boundary data p on [-R,R]^{dim-1} x [0,R]
/// and reports sup |u - p|. Central differences make det-1 quadratics exact
/// discrete solutions, so the deviation must sit at solver tolerance.
LiouvilleReport liouville_test(const QuadraticData& p, double R, double h,
                               const SolverConfig& config = {});

struct StageReport {
    std::string name;
    bool ok = false;
    std::vector<std::pair<std::string, double>> metrics;
    std::string note;
};

struct SlopeWindow {
    double target = 0.0;
    double halfwidth = 0.0;
    bool contains(double v) const { return v >= target - halfwidth && v <= target + halfwidth; }
};

struct PipelineOptions {
    std::vector<double> radii{4.0, 8.0, 16.0, 32.0};
    ScheduleOptions schedule;
    double decay_r_min = 2.0;  // measurement range [r_min, R/4]
    int decay_samples = 9;
    std::vector<double> section_levels{16.0, 64.0, 256.0};
    SlopeWindow ray_window{-1.0, 0.3};        // dim 2 defaults
    SlopeWindow bottom_window{-2.0, 0.3};
    SlopeWindow d1_window{-2.0, 0.4};
    SlopeWindow d2_window{-3.0, 0.5};
    Vec ray_direction;  // default (0.6, 0.8)
};

struct PipelineReport {
    std::vector<StageReport> stages;
    double b_n = 0.0;
    double ray_slope = 0.0;
    double bottom_slope = 0.0;
    double d1_slope = 0.0;
    double d2_slope = 0.0;
    bool bounds_ok = false;
    bool exact_zero = false;  // residual below threshold everywhere (f = 1 branch)
    bool all_ok = false;
    DecayFit ray_fit, bottom_fit, d1_fit, d2_fit;
};

/// The whole far-field study: expanding-domain schedule (two-pass), asymptote
/// fit on the largest field, residual decay along a ray and in the
/// bottom-normalized profile, derivative decay for k = 1, 2, and the section
/// normalization iteration. Each stage reports ok/metrics into one bundle.
PipelineReport full_pipeline(const SourceTerm& f, const QuadraticData& q,
                             const PipelineOptions& opts = {});

}  // namespace mahalf
