// Command-line front end: configure, run and serialize the half-space
// Monge-Ampere experiments. Exit codes: 0 pass, 1 config error,
// 2 computational failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include "mahalf/asymptotics.hpp"
#include "mahalf/errors.hpp"
#include "mahalf/exterior_scheme.hpp"
#include "mahalf/io.hpp"
#include "mahalf/linear_elliptic.hpp"
#include "mahalf/ma_solver.hpp"
#include "mahalf/oracles.hpp"

using json = nlohmann::json;
using namespace mahalf;

namespace {

struct Cli {
    std::string config_path;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    bool quiet = false;
};

void say(const Cli& cli, const std::string& line) {
    if (!cli.quiet) std::cout << line << "\n";
}

// Fail fast on any key the schema does not know.
void require_keys(const json& j, const std::set<std::string>& allowed, const std::string& ctx) {
    if (!j.is_object()) throw ConfigError(ctx + ": expected a JSON object");
    for (const auto& item : j.items())
        if (!allowed.count(item.key()))
            throw ConfigError(ctx + ": unknown key '" + item.key() + "'");
}

json load_config(const Cli& cli, const std::set<std::string>& allowed) {
    json j = json::object();
    if (!cli.config_path.empty()) {
        std::ifstream in(cli.config_path);
        if (!in) throw ConfigError("config: cannot open " + cli.config_path);
        try {
            in >> j;
        } catch (const json::parse_error& e) {
            throw ConfigError(std::string("config: JSON parse failure: ") + e.what());
        }
    }
    std::set<std::string> with_version = allowed;
    with_version.insert("schema_version");
    require_keys(j, with_version, "config");
    if (j.contains("schema_version") && j["schema_version"].get<int>() != 1)
        throw ConfigError("schema_version: only version 1 is understood");
    return j;
}

double num(const json& j, const std::string& key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number()) throw ConfigError(key + ": expected a number");
    return j[key].get<double>();
}

QuadraticData parse_quadratic(const json& j, int dim) {
    if (j.is_null()) return QuadraticData::half_norm_squared(dim);
    require_keys(j, {"A", "b", "c"}, "quadratic");
    Mat A = Mat::Identity(dim, dim);
    Vec b = Vec::Zero(dim);
    double c = 0.0;
    if (j.contains("A")) {
        const auto& rows = j["A"];
        if (!rows.is_array() || static_cast<int>(rows.size()) != dim)
            throw ConfigError("quadratic.A: expected a " + std::to_string(dim) + "x" +
                              std::to_string(dim) + " matrix");
        for (int r = 0; r < dim; ++r)
            for (int cc = 0; cc < dim; ++cc) A(r, cc) = rows[r][cc].get<double>();
    }
    if (j.contains("b")) {
        const auto& vec = j["b"];
        if (!vec.is_array() || static_cast<int>(vec.size()) != dim)
            throw ConfigError("quadratic.b: expected a " + std::to_string(dim) + "-vector");
        for (int r = 0; r < dim; ++r) b[r] = vec[r].get<double>();
    }
    if (j.contains("c")) c = j["c"].get<double>();
    return QuadraticData(A, b, c);
}

SourceTerm parse_source(const json& j) {
    if (j.is_null()) return SourceTerm::uniform_one();
    require_keys(j, {"bump_amplitude", "bump_radius"}, "source");
    const double amp = num(j, "bump_amplitude", 0.0);
    const double rad = num(j, "bump_radius", 0.5);
    if (amp == 0.0) return SourceTerm::uniform_one();
    return SourceTerm::bump(amp, rad);
}

SolverConfig parse_solver(const json& j) {
    SolverConfig cfg;
    if (j.is_null()) return cfg;
    require_keys(j,
                 {"newton_tol", "max_iterations", "backtrack_factor", "min_step", "cvx_floor",
                  "linear_rel_tol", "iteration_log_path"},
                 "solver");
    cfg.newton_tol = num(j, "newton_tol", cfg.newton_tol);
    cfg.max_iterations = static_cast<int>(num(j, "max_iterations", cfg.max_iterations));
    cfg.backtrack_factor = num(j, "backtrack_factor", cfg.backtrack_factor);
    cfg.min_step = num(j, "min_step", cfg.min_step);
    cfg.cvx_floor = num(j, "cvx_floor", cfg.cvx_floor);
    cfg.linear_rel_tol = num(j, "linear_rel_tol", cfg.linear_rel_tol);
    if (j.contains("iteration_log_path"))
        cfg.iteration_log_path = j["iteration_log_path"].get<std::string>();
    cfg.validate();
    return cfg;
}

GridPtr parse_grid(const json& j) {
    if (j.is_null()) return std::make_shared<HalfGrid>(2, 8.0, 8.0, 0.125);
    require_keys(j, {"dim", "L", "L_n", "h"}, "grid");
    const int dim = static_cast<int>(num(j, "dim", 2));
    const double L = num(j, "L", 8.0);
    const double Ln = num(j, "L_n", L);
    const double h = num(j, "h", 0.125);
    return std::make_shared<HalfGrid>(dim, L, Ln, h);
}

std::string out_path(const Cli& cli, const std::string& name) {
    std::filesystem::create_directories(cli.out_dir);
    return (std::filesystem::path(cli.out_dir) / name).string();
}

// ---------------------------------------------------------------------------

int cmd_solve(const Cli& cli) {
    const json cfg = load_config(cli, {"grid", "source", "boundary", "solver"});
    const GridPtr grid = parse_grid(cfg.value("grid", json()));
    const SourceTerm f = parse_source(cfg.value("source", json()));
    const SolverConfig solver = parse_solver(cfg.value("solver", json()));

    std::function<double(const Vec&)> data;
    const json bnd = cfg.value("boundary", json());
    if (bnd.is_null()) {
        const QuadraticData q = QuadraticData::half_norm_squared(grid->dim());
        data = [q](const Vec& x) { return q.eval(x); };
    } else {
        require_keys(bnd, {"kind", "A", "b", "c", "b_n"}, "boundary");
        const std::string kind = bnd.value("kind", std::string("quadratic"));
        if (kind == "quadratic") {
            json qj = bnd;
            qj.erase("kind");
            if (qj.contains("b_n")) qj.erase("b_n");
            const QuadraticData q = parse_quadratic(qj.is_object() && qj.empty() ? json() : qj,
                                                    grid->dim());
            const double bn = num(bnd, "b_n", 0.0);
            data = truncation_boundary_data(q, bn, grid->lateral_extent());
        } else if (kind == "remark") {
            const int dim = grid->dim();
            data = [dim](const Vec& x) { return remark_solution(x, dim).value; };
        } else {
            throw ConfigError("boundary.kind: expected 'quadratic' or 'remark'");
        }
    }

    const MaSolveResult result = solve_ma_dirichlet(grid, f, data, solver);
    const std::string csv = field_csv(result.u);
    write_text_atomic(out_path(cli, "solution.csv"), csv);

    json meta;
    meta["grid"] = json::parse(grid_json(*grid));
    meta["iterations"] = result.iterations;
    meta["final_residual"] = result.final_residual;
    meta["seed"] = cli.seed;
    meta["snapshot_fnv1a"] = fnv1a_hash(csv);
    write_text_atomic(out_path(cli, "solve_meta.json"), meta.dump(2) + "\n");
    say(cli, "solve: converged in " + std::to_string(result.iterations) +
                 " iterations, residual " + std::to_string(result.final_residual));
    return 0;
}

int cmd_verify(const Cli& cli) {
    const json cfg = load_config(
        cli, {"source", "quadratic", "radii", "cells_per_radius", "decay", "section_levels",
              "solver"});
    PipelineOptions opts;
    const SourceTerm f = cfg.contains("source") ? parse_source(cfg["source"])
                                                : SourceTerm::bump(5.0, 0.5);
    const QuadraticData q = parse_quadratic(cfg.value("quadratic", json()), 2);
    if (cfg.contains("radii")) opts.radii = cfg["radii"].get<std::vector<double>>();
    opts.schedule.cells_per_radius =
        static_cast<int>(num(cfg, "cells_per_radius", opts.schedule.cells_per_radius));
    if (cfg.contains("decay")) {
        require_keys(cfg["decay"], {"r_min", "samples"}, "decay");
        opts.decay_r_min = num(cfg["decay"], "r_min", opts.decay_r_min);
        opts.decay_samples = static_cast<int>(num(cfg["decay"], "samples", opts.decay_samples));
    }
    if (cfg.contains("section_levels"))
        opts.section_levels = cfg["section_levels"].get<std::vector<double>>();
    if (cfg.contains("solver")) opts.schedule.solver = parse_solver(cfg["solver"]);

    const PipelineReport report = full_pipeline(f, q, opts);
    json out = json::parse(to_json(report));
    out["seed"] = cli.seed;
    write_text_atomic(out_path(cli, "verify_report.json"), out.dump(2) + "\n");
    for (const StageReport& s : report.stages)
        say(cli, (s.ok ? "pass  " : "FAIL  ") + s.name + (s.note.empty() ? "" : "  (" + s.note + ")"));
    if (!report.all_ok) {
        for (const StageReport& s : report.stages)
            if (!s.ok) std::cerr << "verify: stage '" << s.name << "' failed\n";
        return 2;
    }
    return 0;
}

int cmd_barrier(const Cli& cli) {
    const json cfg = load_config(
        cli, {"delta", "s", "inner_radius", "fields", "lambda", "Lambda", "dim", "sweep"});
    const int dim = static_cast<int>(num(cfg, "dim", 2));
    BarrierSpec spec;
    spec.s = num(cfg, "s", 0.5);
    spec.delta = num(cfg, "delta", 0.2);
    spec.inner_radius = num(cfg, "inner_radius", 2.0);
    const int n_fields = static_cast<int>(num(cfg, "fields", 20));
    const double lambda = num(cfg, "lambda", 0.5);
    const double Lambda = num(cfg, "Lambda", 2.0);
    BarrierSweepOptions sweep;
    if (cfg.contains("sweep")) {
        require_keys(cfg["sweep"], {"r_lo", "r_hi", "n_radii", "n_angles"}, "sweep");
        sweep.r_lo = num(cfg["sweep"], "r_lo", sweep.r_lo);
        sweep.r_hi = num(cfg["sweep"], "r_hi", sweep.r_hi);
        sweep.n_radii = static_cast<int>(num(cfg["sweep"], "n_radii", sweep.n_radii));
        sweep.n_angles = static_cast<int>(num(cfg["sweep"], "n_angles", sweep.n_angles));
    }

    json fields = json::array();
    bool all_ok = true;
    for (int k = 0; k <= n_fields; ++k) {
        const CoefficientField coeffs =
            k == 0 ? CoefficientField::identity(dim)
                   : random_admissible_field(cli.seed + k, dim, lambda, Lambda, spec.s, 1.0);
        BarrierCheckReport probe = barrier_supersolution_check(coeffs, spec, {}, sweep);
        bool ok = probe.sweep_found_radius;
        if (ok) {
            // Re-sample beyond the empirical radius: the sign condition must hold.
            std::vector<Vec> samples;
            for (int m = 1; m <= 16; ++m) {
                const double theta = M_PI * m / 17.0;
                const double r = std::max(probe.empirical_inner_radius, spec.inner_radius) * 1.5;
                if (dim == 2)
                    samples.push_back(make_point(r * std::cos(theta), r * std::sin(theta)));
                else
                    samples.push_back(make_point(r * std::cos(theta), 0.0, r * std::sin(theta)));
            }
            BarrierSpec verify_spec = spec;
            verify_spec.inner_radius = std::max(probe.empirical_inner_radius, spec.inner_radius);
            const BarrierCheckReport confirm =
                barrier_supersolution_check(coeffs, verify_spec, samples, sweep);
            ok = confirm.pass;
            probe.max_over_samples = confirm.max_over_samples;
            probe.pass = confirm.pass;
        }
        all_ok = all_ok && ok;
        json jf = json::parse(to_json(probe));
        jf.erase("sweep");
        jf["field"] = k == 0 ? "identity" : ("random_" + std::to_string(k));
        fields.push_back(jf);
    }
    json out;
    out["seed"] = cli.seed;
    out["fields"] = fields;
    out["all_ok"] = all_ok;
    write_text_atomic(out_path(cli, "barrier_report.json"), out.dump(2) + "\n");
    say(cli, std::string("barrier: ") + (all_ok ? "all fields pass" : "some field failed"));
    return all_ok ? 0 : 2;
}

int cmd_linear(const Cli& cli) {
    const json cfg = load_config(cli, {"experiment", "R0", "h", "beta", "radii", "lambda",
                                       "Lambda", "s", "seed_offset", "dim"});
    const std::string experiment = cfg.value("experiment", std::string("strict_bound"));
    const int dim = static_cast<int>(num(cfg, "dim", 2));

    if (experiment == "strict_bound") {
        const double R0 = num(cfg, "R0", 1.0);
        const double h = num(cfg, "h", 0.0);
        const CoefficientField coeffs = CoefficientField::identity(dim);
        const StrictBoundReport rep = strict_interior_bound_experiment(coeffs, R0, h);
        write_text_atomic(out_path(cli, "linear_report.json"), to_json(rep) + "\n");
        say(cli, "strict bound: eps0 = " + std::to_string(rep.eps0));
        return rep.eps0 > 0.0 ? 0 : 2;
    }
    if (experiment == "limit") {
        const double beta = num(cfg, "beta", 1.0);
        std::vector<double> radii{4.0, 8.0, 16.0};
        if (cfg.contains("radii")) radii = cfg["radii"].get<std::vector<double>>();
        CoefficientField coeffs = CoefficientField::identity(dim);
        coeffs.inner_radius = num(cfg, "R0", 1.0);
        const LimitReport rep = limit_at_infinity_experiment(
            coeffs, beta, radii,
            [beta](const Vec& x) { return beta + 1.0 / (1.0 + x.head(x.size() - 1).norm()); },
            [beta](const Vec&) { return beta + 1.0; });
        write_text_atomic(out_path(cli, "linear_report.json"), to_json(rep) + "\n");
        say(cli, std::string("limit experiment: ") +
                     (rep.monotone_ok ? "deviations shrink" : "deviations do not shrink"));
        return rep.monotone_ok ? 0 : 2;
    }
    if (experiment == "kernel") {
        const double h = num(cfg, "h", 0.125);
        auto grid = std::make_shared<HalfGrid>(dim, 8.0, 8.0, h);
        ExteriorRegion region(grid, 1.0);
        const auto kernel = [dim](const Vec& x) { return poisson_rate(x, dim); };
        const ScalarField u =
            solve_linear_dirichlet(region, CoefficientField::identity(dim),
                                   RegionData::from_function(kernel));
        double err = 0.0;
        for (std::size_t idx : region.interior_nodes())
            err = std::max(err, std::abs(u[idx] - kernel(grid->position(idx))));
        json rep;
        rep["sup_error"] = err;
        rep["h"] = h;
        write_text_atomic(out_path(cli, "linear_report.json"), rep.dump(2) + "\n");
        say(cli, "kernel reproduction: sup error " + std::to_string(err));
        return err < 50.0 * h * h ? 0 : 2;
    }
    throw ConfigError("experiment: expected 'strict_bound', 'limit' or 'kernel'");
}

int cmd_sections(const Cli& cli) {
    const json cfg = load_config(cli, {"field", "grid", "levels"});
    GridPtr grid = cfg.contains("grid") ? parse_grid(cfg["grid"])
                                        : std::make_shared<HalfGrid>(2, 16.0, 16.0, 0.125);
    std::vector<double> levels{4.0, 8.0, 16.0, 32.0};
    if (cfg.contains("levels")) levels = cfg["levels"].get<std::vector<double>>();

    std::string kind = "quadratic";
    QuadraticData q = QuadraticData::half_norm_squared(grid->dim());
    if (cfg.contains("field")) {
        require_keys(cfg["field"], {"kind", "A", "b", "c"}, "field");
        kind = cfg["field"].value("kind", std::string("quadratic"));
        json qj = cfg["field"];
        qj.erase("kind");
        if (!qj.empty()) q = parse_quadratic(qj, grid->dim());
    }
    ScalarField field(grid);
    const int dim = grid->dim();
    if (kind == "quadratic") {
        field = ScalarField::sample(grid, [&q](const Vec& x) { return q.eval(x); });
    } else if (kind == "quadratic_plus_kernel") {
        field = ScalarField::sample(grid, [&q, dim](const Vec& x) {
            return q.eval(x) + (x.norm() > 0.0 ? poisson_rate(x, dim) : 0.0);
        });
    } else if (kind == "remark") {
        field = ScalarField::sample(grid, [dim](const Vec& x) { return remark_solution(x, dim).value; });
    } else {
        throw ConfigError("field.kind: expected 'quadratic', 'quadratic_plus_kernel' or 'remark'");
    }

    const NormalizationResult result = normalization_iteration(field, levels);
    json out = json::parse(to_json(result));
    out["seed"] = cli.seed;
    write_text_atomic(out_path(cli, "sections_report.json"), out.dump(2) + "\n");
    say(cli, std::string("sections: ") +
                 (result.decreasing_ok ? "transform differences decrease" : "no decrease"));
    return result.decreasing_ok ? 0 : 2;
}

int cmd_liouville(const Cli& cli) {
    const json cfg = load_config(cli, {"quadratic", "R", "h", "solver"});
    const QuadraticData p = parse_quadratic(cfg.value("quadratic", json()), 2);
    const double R = num(cfg, "R", 8.0);
    const double h = num(cfg, "h", 0.125);
    const SolverConfig solver = parse_solver(cfg.value("solver", json()));
    const LiouvilleReport rep = liouville_test(p, R, h, solver);
    write_text_atomic(out_path(cli, "liouville_report.json"), to_json(rep) + "\n");
    say(cli, "liouville: sup deviation " + std::to_string(rep.sup_deviation));
    return rep.pass ? 0 : 2;
}

int cmd_suite(const Cli& cli) {
    json out;
    out["seed"] = cli.seed;
    bool all_ok = true;

    {
        const LiouvilleReport rep = liouville_test(QuadraticData::half_norm_squared(2), 4.0, 0.25);
        out["liouville"] = json::parse(to_json(rep));
        all_ok = all_ok && rep.pass;
    }
    {
        BarrierSpec spec;
        spec.s = 0.5;
        spec.delta = 0.2;
        spec.inner_radius = 2.0;
        const BarrierCheckReport rep =
            barrier_supersolution_check(CoefficientField::identity(2), spec, {}, {});
        out["barrier_identity_sweep"] = json::parse(to_json(rep));
        all_ok = all_ok && rep.sweep_found_radius;
    }
    {
        auto grid = std::make_shared<HalfGrid>(2, 8.0, 8.0, 0.25);
        const QuadraticData q = QuadraticData::half_norm_squared(2);
        const ScalarField field =
            ScalarField::sample(grid, [&q](const Vec& x) { return q.eval(x); });
        const NormalizationResult rep = normalization_iteration(field, {4.0, 8.0, 16.0});
        out["sections_quadratic"] = json::parse(to_json(rep));
        all_ok = all_ok && rep.decreasing_ok;
    }
    {
        const StrictBoundReport rep =
            strict_interior_bound_experiment(CoefficientField::identity(2), 1.0, 0.125);
        out["strict_bound_identity"] = json::parse(to_json(rep));
        all_ok = all_ok && rep.eps0 > 0.0;
    }
    out["all_ok"] = all_ok;
    write_text_atomic(out_path(cli, "suite_report.json"), out.dump(2) + "\n");
    say(cli, std::string("suite: ") + (all_ok ? "pass" : "FAIL"));
    return all_ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Half-space Monge-Ampere asymptotics laboratory"};
    app.require_subcommand(1);

    Cli cli;
    app.add_option("--config", cli.config_path, "JSON config path")->expected(1);
    app.add_option("--out", cli.out_dir, "output directory");
    app.add_option("--seed", cli.seed, "random seed for coefficient sweeps");
    app.add_flag("--quiet", cli.quiet, "suppress progress lines");

    auto* solve = app.add_subcommand("solve", "one truncated Dirichlet solve, CSV snapshot");
    auto* verify = app.add_subcommand("verify", "full far-field pipeline with pass/fail stages");
    auto* barrier = app.add_subcommand("barrier", "supersolution sign checks for the decay barrier");
    auto* linear = app.add_subcommand("linear", "linear nondivergence experiments");
    auto* sections = app.add_subcommand("sections", "level-set normalization iteration");
    auto* liouville = app.add_subcommand("liouville", "quadratic rigidity check");
    auto* suite = app.add_subcommand("suite", "fast bundled regression run");

    CLI11_PARSE(app, argc, argv);

    try {
        if (solve->parsed()) return cmd_solve(cli);
        if (verify->parsed()) return cmd_verify(cli);
        if (barrier->parsed()) return cmd_barrier(cli);
        if (linear->parsed()) return cmd_linear(cli);
        if (sections->parsed()) return cmd_sections(cli);
        if (liouville->parsed()) return cmd_liouville(cli);
        if (suite->parsed()) return cmd_suite(cli);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
