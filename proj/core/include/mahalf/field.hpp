#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "mahalf/grid.hpp"
#include "mahalf/types.hpp"

namespace mahalf {

using GridPtr = std::shared_ptr<const HalfGrid>;

/// One real value per grid node.
class ScalarField {
public:
    explicit ScalarField(GridPtr grid, double fill = 0.0);

    /// Sample a pointwise function at every node.
    static ScalarField sample(GridPtr grid, const std::function<double(const Vec&)>& fn);

    const HalfGrid& grid() const { return *grid_; }
    const GridPtr& grid_ptr() const { return grid_; }

    double operator[](std::size_t idx) const { return values_[idx]; }
    double& operator[](std::size_t idx) { return values_[idx]; }
    std::size_t size() const { return values_.size(); }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }

    /// Bilinear (2-D) / trilinear (3-D) interpolation. The point must lie in
    /// the closed grid box. Exact at nodes.
    double interpolate(const Vec& x) const;

    double min() const;
    double max() const;
    bool all_finite() const;

private:
    GridPtr grid_;
    std::vector<double> values_;
};

/// max |a - b| over all nodes (layout must match).
double sup_distance(const ScalarField& a, const ScalarField& b);

}  // namespace mahalf
