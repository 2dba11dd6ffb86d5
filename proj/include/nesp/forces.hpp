#pragma once

#include <cstdint>
#include <vector>

#include "nesp/affinity.hpp"
#include "nesp/knn.hpp"
#include "nesp/matrix.hpp"

namespace nesp {

// All kernels below return gradient-convention fields: descent subtracts them.
// w_ij is the Cauchy weight 1 / (1 + d_ij^2) throughout.

enum class AttractionKernel { Cauchy, Linear };

// Sum over affinity edges of weight_scale * v_ij * k(d) * (y_i - y_j), with
// k = w for cauchy and k = 1 for linear.
ForceField attraction(const AffinityGraph& a, const Embedding& y,
                      AttractionKernel kernel, double weight_scale = 1.0, int threads = 1);

// (n/Z) * sum_j w_ij^2 (y_i - y_j) over all pairs; z_sum carries Z = sum w over
// ordered pairs.
ForceField tsne_repulsion_exact(const Embedding& y, int threads = 1);

// gamma * sum_j w_ij / (d_ij^2 + epsilon) * (y_i - y_j); z_sum carries sum w.
ForceField umap_repulsion_exact(const Embedding& y, double gamma, double epsilon,
                                int threads = 1);

// Edge attraction sum_j (y_i - y_j) minus inverse-square repulsion
// sum_j c_ij / d_ij^2 * (y_i - y_j), with c_ij = (h_i + 1)(h_j + 1) under edge
// repulsion and 1 otherwise. Coincident pairs are separated by a deterministic
// jitter of magnitude 1e-9 in a direction derived from the pair's indices.
ForceField fa2_forces(const NeighborGraph& g, const std::vector<std::uint32_t>& degree,
                      const Embedding& y, bool edge_repulsion, int threads = 1);

enum class ForceMethod { Tsne, Umap, Fa2 };

struct ForceSpec {
    ForceMethod method = ForceMethod::Tsne;
    double rho = 1.0;        // exaggeration; scales repulsion by 1/rho
    double gamma = 1.0;      // umap repulsion weight
    double epsilon = 1e-3;   // umap repulsion smoothing
    bool edge_repulsion = true;
};

// Full gradient for one method, exact kernels. tsne and umap read the affinity
// graph; fa2 reads the neighbor graph and its degrees.
ForceField assemble_gradient(const ForceSpec& spec, const AffinityGraph* a,
                             const NeighborGraph* g, const std::vector<std::uint32_t>* degree,
                             const Embedding& y, int threads = 1);

// Deterministic unit direction for a coincident (i, j) pair.
void pair_jitter_direction(std::uint32_t i, std::uint32_t j, double* dir);

} // namespace nesp
