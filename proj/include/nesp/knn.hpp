#pragma once

#include <cstdint>
#include <vector>

#include "nesp/matrix.hpp"

namespace nesp {

// Neighbor lists with squared Euclidean distances. Directed graphs hold each
// point's k nearest neighbors; undirected graphs hold the union of both
// directions. Neighbor lists are sorted by node index, never self-referential.
struct NeighborGraph {
    std::size_t n = 0;
    std::size_t k = 0;     // per-node count for directed graphs; build k otherwise
    bool directed = true;
    std::vector<std::vector<std::uint32_t>> neighbors;
    std::vector<std::vector<double>> dist2;
};

enum class KnnAlgorithm { Auto, Exact, VpTree };

// k nearest neighbors of every point, self excluded, distance ties broken by
// the smaller node index. Auto picks exact search up to 20000 points and a
// vantage-point tree beyond; both return exact results.
NeighborGraph build_knn(const Matrix& x, std::size_t k,
                        KnnAlgorithm algo = KnnAlgorithm::Auto, int threads = 0);

// Undirected union: an edge {i, j} exists when either direction was present.
NeighborGraph symmetrize_union(const NeighborGraph& g);

// Incident edge count per node of an undirected graph.
std::vector<std::uint32_t> degrees(const NeighborGraph& g);

// Component label per node (the smallest node index in its component).
std::vector<std::uint32_t> connected_components(const NeighborGraph& g);

std::size_t count_components(const std::vector<std::uint32_t>& labels);

// Total undirected edge count.
std::size_t edge_count(const NeighborGraph& g);

} // namespace nesp
