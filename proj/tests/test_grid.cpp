#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <set>

#include "mahalf/errors.hpp"
#include "mahalf/grid.hpp"

using namespace mahalf;

namespace {

std::shared_ptr<HalfGrid> grid2(double L, double Ln, double h) {
    return std::make_shared<HalfGrid>(2, L, Ln, h);
}

}  // namespace

TEST_CASE("half grid node counts and class partition on the 5x3 lattice") {
    auto g = grid2(1.0, 1.0, 0.5);
    CHECK(g->lateral_nodes() == 5);
    CHECK(g->vertical_nodes() == 3);
    CHECK(g->node_count() == 15);

    // Lattice enumeration: bottom row has 5 nodes, the interior is the 3x1 band
    // at height 0.5 away from the side faces, and the remaining 7 face nodes
    // (two side columns above the bottom plus the top row) are outer.
    CHECK(g->count(NodeClass::Bottom) == 5);
    CHECK(g->count(NodeClass::Interior) == 3);
    CHECK(g->count(NodeClass::Outer) == 7);
    CHECK(g->count(NodeClass::Bottom) + g->count(NodeClass::Interior) +
              g->count(NodeClass::Outer) ==
          g->node_count());
}

TEST_CASE("bottom nodes enumerate the x_n = 0 lattice points") {
    auto g = grid2(2.0, 2.0, 1.0);
    std::set<double> xs;
    for (std::size_t idx = 0; idx < g->node_count(); ++idx)
        if (g->classify(idx) == NodeClass::Bottom) {
            const Vec x = g->position(idx);
            CHECK(x[1] == 0.0);
            xs.insert(x[0]);
        }
    CHECK(xs == std::set<double>{-2.0, -1.0, 0.0, 1.0, 2.0});
}

TEST_CASE("non-integer extent ratio is a configuration error") {
    CHECK_THROWS_AS(HalfGrid(2, 1.0, 1.0, 0.3), ConfigError);
    CHECK_THROWS_AS(HalfGrid(2, 1.0, 1.0, -0.5), ConfigError);
    CHECK_THROWS_AS(HalfGrid(4, 1.0, 1.0, 0.5), DimensionError);
    // 1/0.1 is not exactly representable; the tolerance must still accept it.
    CHECK_NOTHROW(HalfGrid(2, 1.0, 1.0, 0.1));
}

TEST_CASE("classify_node on named positions") {
    auto g = grid2(2.0, 2.0, 0.5);
    const auto at = [&](double x1, double x2) {
        for (std::size_t idx = 0; idx < g->node_count(); ++idx) {
            const Vec p = g->position(idx);
            if (p[0] == x1 && p[1] == x2) return g->classify(idx);
        }
        FAIL("node not found");
        return NodeClass::Interior;
    };
    CHECK(at(0.0, 0.0) == NodeClass::Bottom);
    CHECK(at(2.0, 0.5) == NodeClass::Outer);
    CHECK(at(0.0, 0.5) == NodeClass::Interior);
    CHECK_THROWS_AS(g->classify(g->node_count()), ArgumentError);
}

TEST_CASE("annulus selection against brute force") {
    auto g = grid2(2.0, 2.0, 1.0);

    CHECK(g->annulus_nodes(0.0, 1e9).size() == g->node_count());
    const auto origin_only = g->annulus_nodes(0.0, 0.5);
    REQUIRE(origin_only.size() == 1);
    CHECK(g->position(origin_only[0]).norm() == 0.0);

    const auto ring = g->annulus_nodes(1.5, 2.5);
    std::set<std::size_t> expected;
    for (std::size_t idx = 0; idx < g->node_count(); ++idx) {
        const double r = g->position(idx).norm();
        if (r >= 1.5 && r < 2.5) expected.insert(idx);
    }
    CHECK(std::set<std::size_t>(ring.begin(), ring.end()) == expected);
    for (std::size_t idx : ring) CHECK(g->position(idx).norm() == doctest::Approx(2.0).epsilon(0.3));

    CHECK_THROWS_AS(g->annulus_nodes(2.0, 2.0), ArgumentError);
    CHECK_THROWS_AS(g->annulus_nodes(3.0, 2.0), ArgumentError);
}

TEST_CASE("annulus additivity and class partition invariants") {
    for (double h : {0.5, 0.25}) {
        auto g = grid2(2.0, 1.5, h);

        const std::size_t expected_bottom = static_cast<std::size_t>(2 * 2.0 / h + 1);
        CHECK(g->count(NodeClass::Bottom) == expected_bottom);

        const auto a = g->annulus_nodes(0.0, 1.0);
        const auto b = g->annulus_nodes(1.0, 2.0);
        const auto c = g->annulus_nodes(0.0, 2.0);
        std::set<std::size_t> joined(a.begin(), a.end());
        joined.insert(b.begin(), b.end());
        CHECK(joined.size() == a.size() + b.size());
        CHECK(joined == std::set<std::size_t>(c.begin(), c.end()));
    }
}

TEST_CASE("3-D grid classification is consistent") {
    HalfGrid g(3, 1.0, 1.0, 0.5);
    CHECK(g.node_count() == 5 * 5 * 3);
    CHECK(g.count(NodeClass::Bottom) == 25);
    std::size_t interior = 0;
    for (std::size_t idx = 0; idx < g.node_count(); ++idx) {
        const Vec x = g.position(idx);
        CHECK(x[2] >= 0.0);
        if (g.classify(idx) == NodeClass::Interior) ++interior;
    }
    CHECK(interior == 3 * 3 * 1);
}
