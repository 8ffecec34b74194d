#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "mahalf/types.hpp"

namespace mahalf {

/// Classification of a grid node. The three classes partition the node set:
/// Bottom is exactly {x_n = 0}; Outer is any other face of the half-rectangle.
enum class NodeClass { Interior, Bottom, Outer };

const char* to_string(NodeClass c);

/// Uniform tensor grid on the truncated half space
/// [-L, L]^{dim-1} x [0, L_n], spacing h on every axis.
///
/// Immutable after construction; safe to share across threads.
class HalfGrid {
public:
    /// Preconditions: dim in {2,3}; h > 0; L/h and L_n/h integers >= 2.
    /// Throws ConfigError / DimensionError otherwise.
    HalfGrid(int dim, double L, double L_n, double h);

    int dim() const { return dim_; }
    double spacing() const { return h_; }
    double lateral_extent() const { return L_; }
    double height_extent() const { return Ln_; }

    /// Nodes per lateral axis (2L/h + 1) and along the vertical axis (L_n/h + 1).
    int lateral_nodes() const { return nl_; }
    int vertical_nodes() const { return nv_; }
    std::size_t node_count() const { return count_; }

    /// Flat index <-> multi-index. Lateral axes come first, vertical last.
    /// Unused trailing components of the multi-index are zero in 2-D.
    std::array<int, 3> multi_index(std::size_t idx) const;
    std::size_t flat_index(int i, int j, int k = 0) const;
    bool in_bounds(int i, int j, int k = 0) const;

    Vec position(std::size_t idx) const;
    /// x_n of a node without building the full position vector.
    double height(std::size_t idx) const;

    NodeClass classify(std::size_t idx) const;

    std::size_t count(NodeClass c) const;

    /// All nodes with r_in <= |x| < r_out (any class). r_in >= 0, r_in < r_out.
    std::vector<std::size_t> annulus_nodes(double r_in, double r_out) const;

    /// Structural equality: same dim, spacing and extents.
    bool same_layout(const HalfGrid& other) const;

private:
    int dim_;
    double L_, Ln_, h_;
    int nl_, nv_;
    std::size_t count_;
    std::array<std::size_t, 3> class_counts_{};
};

/// Nearest grid node to a point (clamped into the grid box).
std::size_t nearest_node(const HalfGrid& grid, const Vec& x);

}  // namespace mahalf
