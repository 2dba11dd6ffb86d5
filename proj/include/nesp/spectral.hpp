#pragma once

#include <cstdint>
#include <vector>

#include "nesp/affinity.hpp"
#include "nesp/matrix.hpp"

namespace nesp {

// Sparse graph operators over the affinity weights: degree D_ii = sum_j v_ij,
// laplacian L = D - V, its symmetric normalization D^{-1/2} L D^{-1/2}, and
// the iteration matrix M = I - eta D + eta V. Zero-degree nodes take
// D^{-1/2} = 0.
struct GraphOperators {
    std::size_t n = 0;
    std::vector<std::size_t> offset; // CSR over both orientations
    std::vector<std::uint32_t> index;
    std::vector<double> value;
    std::vector<double> degree;
    double eta = 0.0;

    void apply_V(const double* x, double* out, int threads = 1) const;
    void apply_L(const double* x, double* out, int threads = 1) const;
    void apply_L_norm(const double* x, double* out, int threads = 1) const;
    void apply_M(const double* x, double* out, int threads = 1) const;
};

// eta <= 0 picks the default 0.9 / max_i D_ii; anything above 1 / max_i D_ii
// is rejected since it would give M negative entries.
GraphOperators build_operators(const AffinityGraph& a, double eta = 0.0);

struct SpectralOptions {
    std::size_t dense_threshold = 2000; // direct solve up to here, else subspace iteration
    std::size_t max_iterations = 5000;
    double tolerance = 1e-10;
    std::uint64_t seed = 0x5eedULL;     // subspace start (iterative path only)
    int threads = 1;
};

struct SpectralResult {
    Matrix vectors;                    // n x n_components generalized eigenvectors, unit norm
    std::vector<double> eigenvalues;   // of the normalized laplacian, ascending
    Embedding embedding;               // first two columns (when n_components >= 2)
    std::size_t zero_multiplicity = 1; // = connected component count
    bool disconnected = false;
};

// Laplacian eigenmap: the n_components bottom nontrivial eigenvectors b of the
// normalized laplacian mapped back through a = D^{-1/2} b and unit-normalized.
// Only the first (constant-direction) eigenvector is dropped; on a
// disconnected graph the remaining kernel vectors stay in the output, which
// collapses components to single points, and a warning is emitted.
SpectralResult laplacian_eigenmaps(const AffinityGraph& a, std::size_t n_components = 2,
                                   const SpectralOptions& opt = {});

struct LimitIterationResult {
    Embedding embedding;
    double rayleigh[2] = {0.0, 0.0}; // x^T L x per unit-norm column
    std::size_t iterations = 0;
    bool degenerate = false; // a column fell into the trivial direction
};

// Power iteration of the two layout columns under M with the constant
// component projected out and columns renormalized every step; with
// orthogonalize the second column is kept orthogonal to the first. Converges
// to the bottom nontrivial eigenvectors of the unnormalized laplacian. A
// column that collapses onto the trivial direction is zeroed and flagged.
LimitIterationResult tsne_limit_iteration(const GraphOperators& ops, const Embedding& y0,
                                          std::size_t iters, bool orthogonalize = true,
                                          int threads = 1);

} // namespace nesp
