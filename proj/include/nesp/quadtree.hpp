#pragma once

#include <cstdint>
#include <vector>

#include "nesp/matrix.hpp"

namespace nesp {

// Barnes-Hut quadtree over a 2-D layout. Cells split at their center until a
// single point remains; coincident points and ranges deeper than kMaxDepth
// collapse into bucket leaves. Construction is fully deterministic.
class QuadTree {
public:
    static constexpr int kMaxDepth = 64;

    struct Node {
        double com[2] = {0.0, 0.0}; // mass-weighted center
        double mass = 0.0;
        std::uint32_t count = 0;
        double side = 0.0;          // longest cell side
        int child[4] = {-1, -1, -1, -1};
        std::uint32_t first_item = 0, item_count = 0; // leaf bucket; 0 items if internal
        bool leaf = false;
    };

    struct Kernel {
        enum class Type { TsneW2, UmapEps, InverseSquare } type = Type::TsneW2;
        double gamma = 1.0;   // umap-eps only
        double epsilon = 1e-3;
    };

    // masses empty: unit mass per point (the count kernels expect this).
    explicit QuadTree(const Embedding& y, const std::vector<double>& masses = {});

    // Approximated repulsive field at every point of y (the same layout the
    // tree was built from). A cell is opened while side / distance > theta, so
    // theta = 0 recovers the exact sums. For the tsne kernel the field is
    // scaled by n / Z with Z accumulated over the same approximation and
    // returned in z_sum; umap-eps also fills z_sum; inverse-square leaves it 0.
    // query_scale, when present, multiplies point i's field (degree factors).
    ForceField repulsion(const Embedding& y, const Kernel& kernel, double theta,
                         const std::vector<double>* query_scale = nullptr,
                         int threads = 1) const;

    const std::vector<Node>& nodes() const { return nodes_; }
    int root() const { return root_; }
    int leaf_of(std::size_t point) const { return leaf_of_[point]; }
    std::size_t size() const { return n_; }

private:
    int build(std::vector<std::uint32_t>& items, std::vector<std::uint32_t>& scratch,
              std::size_t lo, std::size_t hi, double ox, double oy, double wx, double wy,
              int depth, const Embedding& y);

    std::size_t n_ = 0;
    std::vector<Node> nodes_;
    std::vector<std::uint32_t> items_;
    std::vector<int> leaf_of_;
    std::vector<double> mass_;
    int root_ = -1;
};

} // namespace nesp
