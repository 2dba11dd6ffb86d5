#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "nesp/forces.hpp"
#include "nesp/quadtree.hpp"
#include "nesp/rng.hpp"

using namespace nesp;

namespace {

Embedding random_layout(std::size_t n, std::uint64_t seed, double scale = 1.0) {
    Embedding y;
    y.n = n;
    y.coords.resize(2 * n);
    Rng rng(seed);
    for (double& v : y.coords) v = scale * rng.normal();
    return y;
}

double median_rel_err(const ForceField& got, const ForceField& want) {
    std::vector<double> errs;
    for (std::size_t i = 0; i < got.n; ++i) {
        const double gx = got.values[2 * i], gy = got.values[2 * i + 1];
        const double wx = want.values[2 * i], wy = want.values[2 * i + 1];
        const double denom = std::hypot(wx, wy);
        if (denom > 0.0) errs.push_back(std::hypot(gx - wx, gy - wy) / denom);
    }
    std::sort(errs.begin(), errs.end());
    return errs[errs.size() / 2];
}

} // namespace

TEST_CASE("tree structure: masses, centers, leaf coverage") {
    const Embedding y = random_layout(500, 61);
    const QuadTree tree(y);
    REQUIRE(tree.root() >= 0);
    const auto& nodes = tree.nodes();
    const auto& root = nodes[tree.root()];

    CHECK(root.mass == doctest::Approx(500.0));
    CHECK(root.count == 500);

    double cx = 0.0, cy = 0.0;
    for (std::size_t i = 0; i < y.n; ++i) {
        cx += y.x(i) / double(y.n);
        cy += y.y(i) / double(y.n);
    }
    CHECK(root.com[0] == doctest::Approx(cx).epsilon(1e-12));
    CHECK(root.com[1] == doctest::Approx(cy).epsilon(1e-12));

    // Every point lands in exactly one leaf and the leaf's cell really holds it.
    std::vector<int> seen(y.n, 0);
    for (std::size_t i = 0; i < y.n; ++i) {
        const int leaf = tree.leaf_of(i);
        REQUIRE(leaf >= 0);
        REQUIRE(nodes[leaf].leaf);
        ++seen[i];
    }
    for (const int s : seen) CHECK(s == 1);

    // Child masses sum to the parent mass; child sides never exceed the parent's.
    for (const auto& node : nodes) {
        if (node.leaf) continue;
        double mass = 0.0;
        std::uint32_t count = 0;
        for (const int c : node.child)
            if (c >= 0) {
                mass += nodes[c].mass;
                count += nodes[c].count;
                CHECK(nodes[c].side <= node.side + 1e-12);
            }
        CHECK(mass == doctest::Approx(node.mass).epsilon(1e-12));
        CHECK(count == node.count);
    }
}

TEST_CASE("coincident points collapse into a bucket leaf instead of recursing") {
    Embedding y;
    y.n = 6;
    y.coords = {1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, -2.0, 0.5, 3.0, -0.25};
    const QuadTree tree(y);
    const int leaf0 = tree.leaf_of(0);
    CHECK(leaf0 == tree.leaf_of(1));
    CHECK(leaf0 == tree.leaf_of(2));
    CHECK(leaf0 == tree.leaf_of(3));
    CHECK(tree.nodes()[leaf0].count == 4);
    CHECK(tree.nodes()[leaf0].item_count == 4);
}

TEST_CASE("theta zero reproduces the exact kernels") {
    const Embedding y = random_layout(300, 62, 3.0);

    SUBCASE("normalized heavy-tail") {
        const QuadTree tree(y);
        QuadTree::Kernel k;
        k.type = QuadTree::Kernel::Type::TsneW2;
        const ForceField approx = tree.repulsion(y, k, 0.0, nullptr, 2);
        const ForceField exact = tsne_repulsion_exact(y, 2);
        CHECK(approx.z_sum == doctest::Approx(exact.z_sum).epsilon(1e-12));
        for (std::size_t t = 0; t < approx.values.size(); ++t)
            CHECK(approx.values[t] ==
                  doctest::Approx(exact.values[t]).epsilon(1e-10).scale(1e-12));
    }

    SUBCASE("smoothed heavy-tail") {
        const QuadTree tree(y);
        QuadTree::Kernel k;
        k.type = QuadTree::Kernel::Type::UmapEps;
        k.gamma = 0.8;
        k.epsilon = 1e-3;
        const ForceField approx = tree.repulsion(y, k, 0.0, nullptr, 2);
        const ForceField exact = umap_repulsion_exact(y, 0.8, 1e-3, 2);
        CHECK(approx.z_sum == doctest::Approx(exact.z_sum).epsilon(1e-12));
        for (std::size_t t = 0; t < approx.values.size(); ++t)
            CHECK(approx.values[t] ==
                  doctest::Approx(exact.values[t]).epsilon(1e-10).scale(1e-12));
    }

    SUBCASE("inverse-square with masses and query scaling") {
        // Degree-style masses: the tree aggregates mass-weighted cells, the
        // query side multiplies by the probe's own factor.
        NeighborGraph g;
        g.n = y.n;
        g.directed = false;
        g.neighbors.resize(y.n);
        g.dist2.resize(y.n);
        auto link = [&](std::uint32_t a, std::uint32_t b) {
            g.neighbors[a].push_back(b);
            g.neighbors[b].push_back(a);
            g.dist2[a].push_back(0.0);
            g.dist2[b].push_back(0.0);
        };
        for (std::uint32_t i = 0; i + 1 < y.n; ++i) link(i, i + 1);
        for (auto& lst : g.neighbors) std::sort(lst.begin(), lst.end());
        const auto deg = degrees(g);

        std::vector<double> mass(y.n), qscale(y.n);
        for (std::size_t i = 0; i < y.n; ++i) {
            mass[i] = double(deg[i]) + 1.0;
            qscale[i] = double(deg[i]) + 1.0;
        }
        const QuadTree tree(y, mass);
        QuadTree::Kernel k;
        k.type = QuadTree::Kernel::Type::InverseSquare;
        const ForceField approx = tree.repulsion(y, k, 0.0, &qscale, 2);

        // fa2_forces = linear attraction - this repulsion; isolate by subtracting.
        const ForceField full = fa2_forces(g, deg, y, true, 2);
        ForceField att(y.n);
        for (std::size_t i = 0; i < y.n; ++i)
            for (const std::uint32_t j : g.neighbors[i]) {
                att.point(i)[0] += y.x(i) - y.x(j);
                att.point(i)[1] += y.y(i) - y.y(j);
            }
        for (std::size_t t = 0; t < approx.values.size(); ++t)
            CHECK(att.values[t] - full.values[t] ==
                  doctest::Approx(approx.values[t]).epsilon(1e-9).scale(1e-12));
    }
}

TEST_CASE("moderate theta keeps the field and partition sum accurate") {
    const Embedding y = random_layout(1500, 63, 5.0);
    const QuadTree tree(y);
    QuadTree::Kernel k;
    k.type = QuadTree::Kernel::Type::TsneW2;
    const ForceField approx = tree.repulsion(y, k, 0.5, nullptr, 2);
    const ForceField exact = tsne_repulsion_exact(y, 2);

    CHECK(median_rel_err(approx, exact) < 0.02);
    CHECK(std::fabs(approx.z_sum - exact.z_sum) / exact.z_sum < 0.01);
}

TEST_CASE("tighter theta reduces the error monotonically") {
    const Embedding y = random_layout(800, 64, 4.0);
    const QuadTree tree(y);
    QuadTree::Kernel k;
    k.type = QuadTree::Kernel::Type::TsneW2;
    const ForceField exact = tsne_repulsion_exact(y, 1);
    const double e_025 = median_rel_err(tree.repulsion(y, k, 0.25, nullptr, 1), exact);
    const double e_050 = median_rel_err(tree.repulsion(y, k, 0.5, nullptr, 1), exact);
    const double e_100 = median_rel_err(tree.repulsion(y, k, 1.0, nullptr, 1), exact);
    CHECK(e_025 <= e_050);
    CHECK(e_050 <= e_100);
    CHECK(e_025 < 0.005);
}

TEST_CASE("approximation is deterministic across thread counts") {
    const Embedding y = random_layout(600, 65, 2.0);
    const QuadTree tree(y);
    QuadTree::Kernel k;
    k.type = QuadTree::Kernel::Type::TsneW2;
    const ForceField a = tree.repulsion(y, k, 0.5, nullptr, 1);
    const ForceField b = tree.repulsion(y, k, 0.5, nullptr, 4);
    CHECK(a.values == b.values);
    CHECK(a.z_sum == b.z_sum);
}
