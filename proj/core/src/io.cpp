#include "mahalf/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mahalf/errors.hpp"

namespace mahalf {

using nlohmann::json;

void write_text_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw Error("cannot open " + tmp + " for writing");
        out << content;
    }
    std::filesystem::rename(tmp, path);
}

std::string grid_json(const HalfGrid& grid) {
    json j;
    j["dim"] = grid.dim();
    j["h"] = grid.spacing();
    j["L"] = grid.lateral_extent();
    j["L_n"] = grid.height_extent();
    return j.dump();
}

std::string field_csv(const ScalarField& field) {
    const HalfGrid& g = field.grid();
    std::ostringstream out;
    out.precision(17);
    if (g.dim() == 2)
        out << "i,j,x1,x2,value\n";
    else
        out << "i,j,k,x1,x2,x3,value\n";
    for (std::size_t idx = 0; idx < g.node_count(); ++idx) {
        const auto mi = g.multi_index(idx);
        const Vec x = g.position(idx);
        out << mi[0] << ',' << mi[1];
        if (g.dim() == 3) out << ',' << mi[2];
        for (int d = 0; d < g.dim(); ++d) out << ',' << x[d];
        out << ',' << field[idx] << '\n';
    }
    return out.str();
}

void write_field_csv(const std::string& path, const ScalarField& field) {
    write_text_atomic(path, field_csv(field));
}

namespace {

json decay_json(const DecayFit& fit) {
    json j;
    j["mode"] = fit.mode == DecayMode::Ray ? "ray" : "bottom-normalized";
    j["exponent"] = fit.exponent;
    j["constant"] = fit.constant;
    j["max_log_dev"] = fit.max_log_dev;
    j["r_min"] = fit.r_min;
    j["r_max"] = fit.r_max;
    j["samples"] = fit.samples;
    j["underflow"] = fit.underflow;
    j["exact_zero"] = fit.exact_zero;
    return j;
}

json stage_json(const StageReport& stage) {
    json j;
    j["name"] = stage.name;
    j["status"] = stage.ok ? "pass" : "fail";
    json metrics = json::object();
    for (const auto& [key, value] : stage.metrics) metrics[key] = value;
    j["metrics"] = metrics;
    if (!stage.note.empty()) j["note"] = stage.note;
    return j;
}

}  // namespace

std::string to_json(const DecayFit& fit) { return decay_json(fit).dump(2); }

std::string to_json(const PipelineReport& report) {
    json j;
    j["stages"] = json::array();
    for (const StageReport& s : report.stages) j["stages"].push_back(stage_json(s));
    j["slopes"] = {{"ray", report.ray_slope},
                   {"bottom_normalized", report.bottom_slope},
                   {"derivative_k1", report.d1_slope},
                   {"derivative_k2", report.d2_slope}};
    j["b_n"] = report.b_n;
    j["bounds_ok"] = report.bounds_ok;
    j["exact_zero"] = report.exact_zero;
    j["all_ok"] = report.all_ok;
    return j.dump(2);
}

std::string to_json(const BarrierCheckReport& report) {
    json j;
    j["max_over_samples"] = report.max_over_samples;
    j["pass"] = report.pass;
    j["sweep_found_radius"] = report.sweep_found_radius;
    j["empirical_inner_radius"] = report.empirical_inner_radius;
    json sweep = json::array();
    for (const auto& p : report.sweep)
        sweep.push_back({{"radius", p.radius}, {"max_operator_value", p.max_operator_value}});
    j["sweep"] = sweep;
    return j.dump(2);
}

std::string to_json(const StrictBoundReport& report) {
    json j;
    j["eps0"] = report.eps0;
    j["max_middle_arc"] = report.max_middle_arc;
    j["h"] = report.h;
    return j.dump(2);
}

std::string to_json(const LimitReport& report) {
    json j;
    json table = json::array();
    for (const auto& [r, dev] : report.deviations)
        table.push_back({{"radius", r}, {"sup_deviation", dev}});
    j["deviations"] = table;
    j["monotone_ok"] = report.monotone_ok;
    return j.dump(2);
}

std::string to_json(const NormalizationResult& result) {
    json j;
    j["levels"] = result.levels;
    json ts = json::array();
    for (const Mat& T : result.transforms) {
        json rows = json::array();
        for (int r = 0; r < T.rows(); ++r) {
            json row = json::array();
            for (int c = 0; c < T.cols(); ++c) row.push_back(T(r, c));
            rows.push_back(row);
        }
        ts.push_back(rows);
    }
    j["transforms"] = ts;
    j["diffs"] = result.diffs;
    j["violations"] = result.violations;
    j["decreasing_ok"] = result.decreasing_ok;
    return j.dump(2);
}

std::string to_json(const XiReport& report) {
    json j;
    json levels = json::array();
    for (const XiLevel& l : report.levels)
        levels.push_back({{"M", l.M},
                          {"sup_diff", l.sup_diff},
                          {"grad_quotient", l.grad_quotient},
                          {"domain_extent", l.domain_extent},
                          {"h", l.h}});
    j["levels"] = levels;
    j["sup_slope"] = report.sup_slope;
    j["grad_slope"] = report.grad_slope;
    return j.dump(2);
}

std::string to_json(const LiouvilleReport& report) {
    json j;
    j["sup_deviation"] = report.sup_deviation;
    j["tolerance"] = report.tolerance;
    j["pass"] = report.pass;
    return j.dump(2);
}

std::string to_json(const SandwichReport& report) {
    json j;
    j["inner_ok"] = report.inner_ok;
    j["outer_ok"] = report.outer_ok;
    j["inner_margin"] = report.inner_margin;
    j["outer_margin"] = report.outer_margin;
    j["inner_nodes"] = report.inner_nodes;
    j["section_nodes"] = report.section_nodes;
    return j.dump(2);
}

std::string to_json(const ScheduleResult& result) {
    json j;
    json entries = json::array();
    for (const ScheduleEntry& e : result.entries) {
        json je;
        je["radius"] = e.radius;
        je["h"] = e.h;
        je["converged"] = e.converged;
        je["bn_used"] = e.bn_used;
        je["bounds_ok"] = e.bounds_ok;
        je["worst_lower"] = e.worst_lower;
        je["worst_upper"] = e.worst_upper;
        if (!e.error.empty()) je["error"] = e.error;
        entries.push_back(je);
    }
    j["entries"] = entries;
    j["deviations"] = result.deviations;
    j["b_n"] = result.b_n;
    j["all_converged"] = result.all_converged;
    j["all_bounds_ok"] = result.all_bounds_ok;
    return j.dump(2);
}

std::uint64_t fnv1a_hash(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace mahalf
