#include "mahalf/exterior_scheme.hpp"

#include <algorithm>
#include <cmath>

#include "mahalf/errors.hpp"

namespace mahalf {

std::function<double(const Vec&)> truncation_boundary_data(const QuadraticData& q, double b_n,
                                                           double R) {
    if (!(R > 0.0)) throw ArgumentError("truncation data: R must be positive");
    return [q, b_n](const Vec& x) { return q.eval(x) + b_n * x[x.size() - 1]; };
}

namespace {

// Sandwich bounds (affine-covariant form): with T the upper-triangular factor
// of A, q - (Lambda-1) T_nn x_n <= u <= q + T_nn x_n, checked with slack.
void check_sandwich(ScheduleEntry& entry, const QuadraticData& q, double Lambda, double slack) {
    const HalfGrid& g = entry.u.grid();
    const int d = g.dim();
    const Mat T = lu_normalize(q.A);
    const double tnn = T(d - 1, d - 1);

    entry.worst_lower = 0.0;
    entry.worst_upper = 0.0;
    for (std::size_t idx = 0; idx < g.node_count(); ++idx) {
        const Vec x = g.position(idx);
        const double xn = x[d - 1];
        const double literal = entry.u[idx] - entry.bn_used * xn;
        const double qv = q.eval(x);
        entry.worst_lower =
            std::max(entry.worst_lower, (qv - (Lambda - 1.0) * tnn * xn - slack) - literal);
        entry.worst_upper =
            std::max(entry.worst_upper, literal - (qv + tnn * xn + slack));
    }
    entry.bounds_ok = entry.worst_lower <= 0.0 && entry.worst_upper <= 0.0;
}

double schedule_spacing(double radius, int cells_per_radius) {
    return radius / cells_per_radius;
}

}  // namespace

ScheduleResult expanding_domain_solve(const SourceTerm& f, const QuadraticData& q,
                                      const std::vector<double>& radii, const BnMode& mode,
                                      const ScheduleOptions& opts) {
    if (radii.empty() || !std::is_sorted(radii.begin(), radii.end()) ||
        std::adjacent_find(radii.begin(), radii.end()) != radii.end())
        throw ArgumentError("schedule: radii must be strictly increasing");
    if (radii.front() < 4.0 * std::max(f.support_radius, 0.25))
        throw ArgumentError("schedule: smallest radius must be at least 4x the source support");
    if (q.dim() != opts.dim) throw ArgumentError("schedule: quadratic/dim mismatch");

    ScheduleResult result;
    result.b_n = mode.fixed_value;
    const int d = opts.dim;

    int consecutive_failures = 0;
    for (std::size_t j = 0; j < radii.size(); ++j) {
        const double R = radii[j];
        const double h = schedule_spacing(R, opts.cells_per_radius);
        auto grid = std::make_shared<HalfGrid>(d, R, R, h);
        ScheduleEntry entry{R, h, ScalarField(grid)};
        entry.bn_used = result.b_n;
        try {
            const auto data = truncation_boundary_data(q, entry.bn_used, R);
            QuadraticData start_q = q;
            start_q.b[d - 1] += entry.bn_used;
            const ScalarField start =
                ScalarField::sample(grid, [&start_q](const Vec& x) { return start_q.eval(x); });
            MaSolveResult solved = solve_ma_dirichlet(grid, f, data, opts.solver, start);
            entry.u = std::move(solved.u);
            entry.converged = true;
            consecutive_failures = 0;
        } catch (const NewtonError& e) {
            entry.u = e.iterate();
            entry.error = e.what();
            ++consecutive_failures;
        } catch (const Error& e) {
            entry.error = e.what();
            ++consecutive_failures;
        }

        if (entry.converged && mode.two_pass && j == 0) {
            // Estimate b_n once on the smallest domain, then shift the field by
            // the exact affine identity u[data + b x_n] = u[data] + b x_n.
            const auto annulus =
                grid->annulus_nodes(opts.fit_inner_frac * R, opts.fit_outer_frac * R);
            const QuadraticData fit = fit_quadratic_asymptote(entry.u, annulus, true);
            const double correction = fit.b[d - 1] - (q.b[d - 1] + entry.bn_used);
            for (std::size_t idx = 0; idx < grid->node_count(); ++idx)
                entry.u[idx] += correction * grid->position(idx)[d - 1];
            entry.bn_used += correction;
            result.b_n = entry.bn_used;
        }

        if (entry.converged)
            check_sandwich(entry, q, f.upper, opts.bounds_slack_factor * entry.h * entry.h);

        result.entries.push_back(std::move(entry));
        if (consecutive_failures >= 2) break;
    }

    result.all_converged =
        result.entries.size() == radii.size() &&
        std::all_of(result.entries.begin(), result.entries.end(),
                    [](const ScheduleEntry& e) { return e.converged; });
    result.all_bounds_ok =
        result.all_converged &&
        std::all_of(result.entries.begin(), result.entries.end(),
                    [](const ScheduleEntry& e) { return e.bounds_ok; });

    // Local deviation over K between consecutive fields: restrict to the
    // coarser grid's nodes, interpolating the finer field where needed.
    for (std::size_t j = 0; j + 1 < result.entries.size(); ++j) {
        const ScheduleEntry& fine = result.entries[j];
        const ScheduleEntry& coarse = result.entries[j + 1];
        if (!fine.converged || !coarse.converged) break;
        double sup = 0.0;
        const HalfGrid& cg = coarse.u.grid();
        for (std::size_t idx = 0; idx < cg.node_count(); ++idx) {
            const Vec x = cg.position(idx);
            if (x.norm() > opts.compact_radius) continue;
            sup = std::max(sup, std::abs(coarse.u[idx] - fine.u.interpolate(x)));
        }
        result.deviations.push_back(sup);
    }
    return result;
}

LiouvilleReport liouville_test(const QuadraticData& p, double R, double h,
                               const SolverConfig& config) {
    auto grid = std::make_shared<HalfGrid>(p.dim(), R, R, h);
    const auto data = [&p](const Vec& x) { return p.eval(x); };
    const MaSolveResult solved = solve_ma_dirichlet(grid, SourceTerm::uniform_one(), data, config);

    LiouvilleReport rep;
    rep.tolerance = 10.0 * config.newton_tol;
    for (std::size_t idx = 0; idx < grid->node_count(); ++idx)
        rep.sup_deviation =
            std::max(rep.sup_deviation, std::abs(solved.u[idx] - p.eval(grid->position(idx))));
    rep.pass = rep.sup_deviation <= rep.tolerance;
    return rep;
}

PipelineReport full_pipeline(const SourceTerm& f, const QuadraticData& q,
                             const PipelineOptions& opts) {
    PipelineReport rep;
    const int d = opts.schedule.dim;

    // Stage 1: expanding-domain schedule, two-pass linear correction.
    ScheduleResult schedule;
    {
        StageReport stage{"schedule", false, {}, ""};
        schedule = expanding_domain_solve(f, q, opts.radii, BnMode::estimate_two_pass(),
                                          opts.schedule);
        rep.b_n = schedule.b_n;
        rep.bounds_ok = schedule.all_bounds_ok;
        bool deviations_ok = true;
        int violations = 0;
        for (std::size_t k = 1; k < schedule.deviations.size(); ++k)
            if (schedule.deviations[k] > 1.1 * schedule.deviations[k - 1]) ++violations;
        deviations_ok = violations <= 1;
        stage.ok = schedule.all_converged && schedule.all_bounds_ok && deviations_ok;
        stage.metrics.emplace_back("b_n", schedule.b_n);
        for (std::size_t k = 0; k < schedule.deviations.size(); ++k)
            stage.metrics.emplace_back("deviation_" + std::to_string(k), schedule.deviations[k]);
        if (!schedule.all_converged) stage.note = "a truncated solve failed";
        rep.stages.push_back(std::move(stage));
        if (!schedule.all_converged) {
            rep.all_ok = false;
            return rep;
        }
    }

    const ScheduleEntry& top = schedule.entries.back();
    const double R = top.radius;

    // Stage 2: constrained quadratic asymptote on the far annulus.
    QuadraticData fit = q;
    {
        StageReport stage{"asymptote_fit", false, {}, ""};
        const auto annulus = top.u.grid().annulus_nodes(opts.schedule.fit_inner_frac * R,
                                                        opts.schedule.fit_outer_frac * R);
        fit = fit_quadratic_asymptote(top.u, annulus, true);
        rep.b_n = fit.b[d - 1];
        stage.ok = true;
        stage.metrics.emplace_back("b_n", fit.b[d - 1]);
        stage.metrics.emplace_back("A_nn", fit.A(d - 1, d - 1));
        stage.metrics.emplace_back("det_A", fit.A.determinant());
        rep.stages.push_back(std::move(stage));
    }

    const ScalarField V = residual_field(top.u, fit);
    Vec ray = opts.ray_direction;
    if (ray.size() != d) {
        ray = Vec::Zero(d);
        ray[0] = 0.6;
        ray[d - 1] = 0.8;
    }
    const double r_max = R / 4.0;

    // Stage 3/4: residual decay along the ray and bottom-normalized.
    {
        StageReport stage{"ray_decay", false, {}, ""};
        rep.ray_fit = decay_exponent_ray(V, ray, opts.decay_r_min, r_max, opts.decay_samples);
        rep.ray_slope = rep.ray_fit.exponent;
        rep.exact_zero = rep.ray_fit.exact_zero;
        stage.ok = rep.ray_fit.exact_zero || (!rep.ray_fit.underflow &&
                                              opts.ray_window.contains(rep.ray_fit.exponent));
        if (rep.ray_fit.exact_zero) stage.note = "exact-zero residual";
        stage.metrics.emplace_back("slope", rep.ray_fit.exponent);
        stage.metrics.emplace_back("constant", rep.ray_fit.constant);
        rep.stages.push_back(std::move(stage));
    }
    {
        StageReport stage{"bottom_decay", false, {}, ""};
        rep.bottom_fit = decay_exponent_bottom(V, opts.decay_r_min, r_max, opts.decay_samples);
        rep.bottom_slope = rep.bottom_fit.exponent;
        stage.ok = rep.bottom_fit.exact_zero ||
                   (!rep.bottom_fit.underflow && opts.bottom_window.contains(rep.bottom_fit.exponent));
        if (rep.bottom_fit.exact_zero) stage.note = "exact-zero residual";
        stage.metrics.emplace_back("slope", rep.bottom_fit.exponent);
        rep.stages.push_back(std::move(stage));
    }

    // Stage 5/6: derivative decay along the ray.
    for (int k : {1, 2}) {
        StageReport stage{"derivative_decay_k" + std::to_string(k), false, {}, ""};
        const DecayFit fit_k =
            derivative_decay(top.u, fit, k, ray, opts.decay_r_min, r_max, opts.decay_samples);
        const SlopeWindow& win = k == 1 ? opts.d1_window : opts.d2_window;
        stage.ok = fit_k.exact_zero || (!fit_k.underflow && win.contains(fit_k.exponent));
        if (fit_k.exact_zero) stage.note = "exact-zero residual";
        stage.metrics.emplace_back("slope", fit_k.exponent);
        if (k == 1) {
            rep.d1_fit = fit_k;
            rep.d1_slope = fit_k.exponent;
        } else {
            rep.d2_fit = fit_k;
            rep.d2_slope = fit_k.exponent;
        }
        rep.stages.push_back(std::move(stage));
    }

    // Stage 7: section normalization on the largest field.
    {
        StageReport stage{"sections", false, {}, ""};
        std::vector<double> levels;
        const double max_level = 0.5 * std::pow(R / 1.25, 2);
        for (double M : opts.section_levels)
            if (M <= max_level) levels.push_back(M);
        if (levels.size() >= 2) {
            const NormalizationResult norm = normalization_iteration(top.u, levels);
            stage.ok = norm.decreasing_ok;
            for (std::size_t k = 0; k < norm.diffs.size(); ++k)
                stage.metrics.emplace_back("T_diff_" + std::to_string(k), norm.diffs[k]);
        } else {
            stage.note = "domain too small for the requested section levels";
        }
        rep.stages.push_back(std::move(stage));
    }

    rep.all_ok = std::all_of(rep.stages.begin(), rep.stages.end(),
                             [](const StageReport& s) { return s.ok; });
    return rep;
}

}  // namespace mahalf
