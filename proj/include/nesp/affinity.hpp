#pragma once

#include <cstdint>
#include <vector>

#include "nesp/knn.hpp"
#include "nesp/matrix.hpp"

namespace nesp {

enum class AffinityKind { GaussianPerplexity, BinaryKnn };

struct AffinityEdge {
    std::uint32_t i, j; // i < j
    double v;
};

// Symmetric affinities on a sparse neighbor structure. Edges are stored once
// per unordered pair; adjacency arrays expand both orientations for per-node
// iteration. Normalized weights are p_ij = v_ij / normalizer with the ordered
// sum over all pairs equal to one.
struct AffinityGraph {
    std::size_t n = 0;
    AffinityKind kind = AffinityKind::BinaryKnn;
    std::vector<AffinityEdge> edges;      // sorted by (i, j)
    double total_mass = 0.0;              // sum of v over both orientations
    std::vector<double> sigmas;           // per-point bandwidths (gaussian kind)
    std::vector<std::uint8_t> flagged;    // per-point calibration trouble (gaussian kind)

    std::vector<std::size_t> adj_offset;  // CSR over both orientations
    std::vector<std::uint32_t> adj_index;
    std::vector<double> adj_value;

    void build_adjacency();
    double p_normalizer() const;          // gaussian: n; binary: total_mass

    // Scale turning stored v into the weight the shared gradient uses for the
    // divergence-style loss: that loss is written in v = n * p, so binary
    // affinities (normalized by their total mass) pick up n / total_mass while
    // gaussian affinities already carry it.
    double gradient_weight_scale() const;
};

struct PerplexityOptions {
    double tolerance = 1e-5;   // relative, on the perplexity scale
    int max_iterations = 200;
    double sigma_lo = 1e-20;
    double sigma_hi = 1e20;
};

// Per-point Gaussian bandwidths by bisection so that the entropy of each
// conditional distribution matches the requested perplexity, then the
// symmetrized affinities v_ij = (p_i|j + p_j|i) / 2 over the union of
// directions. Input is a directed kNN graph with at least ceil(perplexity)
// neighbors per node.
AffinityGraph perplexity_calibrate(const NeighborGraph& g, double perplexity,
                                   const PerplexityOptions& opt = {}, int threads = 0);

// v = 1 on every undirected edge.
AffinityGraph binary_affinities(const NeighborGraph& g);

struct NormalizedEntry {
    std::uint32_t i, j;
    double p;
};

// Ordered-pair view (both orientations) of p_ij; sums to one.
std::vector<NormalizedEntry> normalized_view(const AffinityGraph& a);

} // namespace nesp
