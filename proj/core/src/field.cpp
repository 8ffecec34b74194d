#include "mahalf/field.hpp"

#include <algorithm>
#include <cmath>

#include "mahalf/errors.hpp"

namespace mahalf {

ScalarField::ScalarField(GridPtr grid, double fill)
    : grid_(std::move(grid)), values_(grid_->node_count(), fill) {}

ScalarField ScalarField::sample(GridPtr grid, const std::function<double(const Vec&)>& fn) {
    ScalarField f(std::move(grid));
    const HalfGrid& g = f.grid();
    for (std::size_t idx = 0; idx < g.node_count(); ++idx) f[idx] = fn(g.position(idx));
    return f;
}

namespace {

struct Cell {
    int i0;
    double t;
};

Cell locate(double coord, double origin, double h, int n_nodes) {
    double s = (coord - origin) / h;
    int i0 = static_cast<int>(std::floor(s));
    i0 = std::clamp(i0, 0, n_nodes - 2);
    return {i0, s - i0};
}

}  // namespace

double ScalarField::interpolate(const Vec& x) const {
    const HalfGrid& g = *grid_;
    const double h = g.spacing();
    const double eps = 1e-9 * h;
    if (x[0] < -g.lateral_extent() - eps || x[0] > g.lateral_extent() + eps)
        throw ArgumentError("interpolation point outside grid (x1)");
    const double xn = x[g.dim() - 1];
    if (xn < -eps || xn > g.height_extent() + eps)
        throw ArgumentError("interpolation point outside grid (x_n)");

    const Cell c1 = locate(x[0], -g.lateral_extent(), h, g.lateral_nodes());
    if (g.dim() == 2) {
        const Cell c2 = locate(x[1], 0.0, h, g.vertical_nodes());
        const double v00 = values_[g.flat_index(c1.i0, c2.i0)];
        const double v10 = values_[g.flat_index(c1.i0 + 1, c2.i0)];
        const double v01 = values_[g.flat_index(c1.i0, c2.i0 + 1)];
        const double v11 = values_[g.flat_index(c1.i0 + 1, c2.i0 + 1)];
        return (1 - c1.t) * (1 - c2.t) * v00 + c1.t * (1 - c2.t) * v10 +
               (1 - c1.t) * c2.t * v01 + c1.t * c2.t * v11;
    }
    if (x[1] < -g.lateral_extent() - eps || x[1] > g.lateral_extent() + eps)
        throw ArgumentError("interpolation point outside grid (x2)");
    const Cell c2 = locate(x[1], -g.lateral_extent(), h, g.lateral_nodes());
    const Cell c3 = locate(x[2], 0.0, h, g.vertical_nodes());
    double acc = 0.0;
    for (int di = 0; di <= 1; ++di)
        for (int dj = 0; dj <= 1; ++dj)
            for (int dk = 0; dk <= 1; ++dk) {
                const double w = (di ? c1.t : 1 - c1.t) * (dj ? c2.t : 1 - c2.t) *
                                 (dk ? c3.t : 1 - c3.t);
                acc += w * values_[g.flat_index(c1.i0 + di, c2.i0 + dj, c3.i0 + dk)];
            }
    return acc;
}

double ScalarField::min() const { return *std::min_element(values_.begin(), values_.end()); }
double ScalarField::max() const { return *std::max_element(values_.begin(), values_.end()); }

bool ScalarField::all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

double sup_distance(const ScalarField& a, const ScalarField& b) {
    if (!a.grid().same_layout(b.grid())) throw ArgumentError("fields live on different grids");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace mahalf
