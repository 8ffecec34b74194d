#include "mahalf/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mahalf/errors.hpp"

namespace mahalf {

namespace {

// L/h must be an integer up to floating-point slack.
int checked_ratio(double extent, double h, const char* name) {
    const double ratio = extent / h;
    const double rounded = std::round(ratio);
    if (std::abs(ratio - rounded) > 1e-9 * std::max(1.0, std::abs(ratio))) {
        throw ConfigError(std::string(name) + ": extent " + std::to_string(extent) +
                          " is not an integer multiple of spacing h = " + std::to_string(h));
    }
    return static_cast<int>(rounded);
}

}  // namespace

const char* to_string(NodeClass c) {
    switch (c) {
        case NodeClass::Interior: return "interior";
        case NodeClass::Bottom: return "bottom";
        case NodeClass::Outer: return "outer";
    }
    return "?";
}

HalfGrid::HalfGrid(int dim, double L, double L_n, double h) : dim_(dim), L_(L), Ln_(L_n), h_(h) {
    if (dim != 2 && dim != 3)
        throw DimensionError("dim: only 2 and 3 are supported, got " + std::to_string(dim));
    if (!(h > 0.0)) throw ConfigError("h: spacing must be positive");
    const int ml = checked_ratio(L, h, "L");
    const int mv = checked_ratio(L_n, h, "L_n");
    if (ml < 2 || mv < 2)
        throw ConfigError("L, L_n: need at least 2 cells per direction (got " +
                          std::to_string(ml) + ", " + std::to_string(mv) + ")");
    nl_ = 2 * ml + 1;
    nv_ = mv + 1;
    count_ = static_cast<std::size_t>(nv_) * nl_;
    if (dim_ == 3) count_ *= nl_;

    for (std::size_t idx = 0; idx < count_; ++idx)
        ++class_counts_[static_cast<std::size_t>(classify(idx))];
}

std::array<int, 3> HalfGrid::multi_index(std::size_t idx) const {
    std::array<int, 3> mi{0, 0, 0};
    mi[0] = static_cast<int>(idx % nl_);
    if (dim_ == 2) {
        mi[1] = static_cast<int>(idx / nl_);
    } else {
        const std::size_t rest = idx / nl_;
        mi[1] = static_cast<int>(rest % nl_);
        mi[2] = static_cast<int>(rest / nl_);
    }
    return mi;
}

std::size_t HalfGrid::flat_index(int i, int j, int k) const {
    if (dim_ == 2) return static_cast<std::size_t>(j) * nl_ + i;
    return (static_cast<std::size_t>(k) * nl_ + j) * nl_ + i;
}

bool HalfGrid::in_bounds(int i, int j, int k) const {
    if (i < 0 || i >= nl_) return false;
    if (dim_ == 2) return j >= 0 && j < nv_;
    return j >= 0 && j < nl_ && k >= 0 && k < nv_;
}

Vec HalfGrid::position(std::size_t idx) const {
    const auto mi = multi_index(idx);
    Vec x(dim_);
    x[0] = -L_ + mi[0] * h_;
    if (dim_ == 2) {
        x[1] = mi[1] * h_;
    } else {
        x[1] = -L_ + mi[1] * h_;
        x[2] = mi[2] * h_;
    }
    return x;
}

double HalfGrid::height(std::size_t idx) const {
    const auto mi = multi_index(idx);
    return (dim_ == 2 ? mi[1] : mi[2]) * h_;
}

NodeClass HalfGrid::classify(std::size_t idx) const {
    if (idx >= count_) throw ArgumentError("node index " + std::to_string(idx) + " out of range");
    const auto mi = multi_index(idx);
    const int vertical = dim_ == 2 ? mi[1] : mi[2];
    if (vertical == 0) return NodeClass::Bottom;
    bool on_face = vertical == nv_ - 1 || mi[0] == 0 || mi[0] == nl_ - 1;
    if (dim_ == 3) on_face = on_face || mi[1] == 0 || mi[1] == nl_ - 1;
    return on_face ? NodeClass::Outer : NodeClass::Interior;
}

std::size_t HalfGrid::count(NodeClass c) const { return class_counts_[static_cast<std::size_t>(c)]; }

std::vector<std::size_t> HalfGrid::annulus_nodes(double r_in, double r_out) const {
    if (!(r_in >= 0.0) || !(r_in < r_out))
        throw ArgumentError("annulus requires 0 <= r_in < r_out");
    std::vector<std::size_t> out;
    for (std::size_t idx = 0; idx < count_; ++idx) {
        const double r = position(idx).norm();
        if (r >= r_in && r < r_out) out.push_back(idx);
    }
    return out;
}

bool HalfGrid::same_layout(const HalfGrid& other) const {
    return dim_ == other.dim_ && L_ == other.L_ && Ln_ == other.Ln_ && h_ == other.h_;
}

std::size_t nearest_node(const HalfGrid& grid, const Vec& x) {
    const double h = grid.spacing();
    const auto clamp = [](int v, int lo, int hi) { return std::min(std::max(v, lo), hi); };
    const int i = clamp(static_cast<int>(std::round((x[0] + grid.lateral_extent()) / h)), 0,
                        grid.lateral_nodes() - 1);
    if (grid.dim() == 2) {
        const int j = clamp(static_cast<int>(std::round(x[1] / h)), 0, grid.vertical_nodes() - 1);
        return grid.flat_index(i, j);
    }
    const int j = clamp(static_cast<int>(std::round((x[1] + grid.lateral_extent()) / h)), 0,
                        grid.lateral_nodes() - 1);
    const int k = clamp(static_cast<int>(std::round(x[2] / h)), 0, grid.vertical_nodes() - 1);
    return grid.flat_index(i, j, k);
}

}  // namespace mahalf
