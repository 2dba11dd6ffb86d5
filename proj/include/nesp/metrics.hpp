#pragma once

#include <cstdint>
#include <vector>

#include "nesp/affinity.hpp"
#include "nesp/matrix.hpp"
#include "nesp/optimizer.hpp"

namespace nesp {

// Mean fraction of each sampled point's k strongest-affinity neighbors that
// reappear among its k nearest layout neighbors. Affinity ties at the k-th
// place break toward the smaller node index (with binary affinities every
// stored neighbor ties, so the metric degrades to truncated edge-set recall).
// Points with fewer than k affinity edges contribute |edges found| / k.
// n_samples = 0 or >= n scores every point.
double knn_recall(const AffinityGraph& a, const Embedding& y, std::size_t k = 15,
                  std::size_t n_samples = 10000, std::uint64_t seed = 0x42, int threads = 1);

// Distance correlation of the two layouts over an identical seeded point
// subsample: double-centered pairwise-distance products, normalized by the
// geometric mean of the per-layout variances. A constant layout has zero
// distance variance; the result is then 0 and *degenerate is set.
double distance_correlation(const Embedding& y1, const Embedding& y2,
                            std::size_t subsample = 5000, std::uint64_t seed = 0x42,
                            bool* degenerate = nullptr);

// max - min over all 2n coordinates pooled, a single scalar.
double embedding_span(const Embedding& e);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
};

// Least squares on (log x, log y); all inputs must be positive.
LinearFit fit_log_log(const std::vector<double>& x, const std::vector<double>& y);

// Full-batch runs from y0 over the given repulsion weights; returns the
// weight whose final layout span lands closest to ref_span on the log scale.
double match_gamma_by_span(const AffinityGraph& a, const Embedding& y0, double ref_span,
                           const std::vector<double>& gamma_grid, std::size_t full_iters,
                           double epsilon, const OptimOptions& opt, double* matched_span =
                               nullptr);

std::vector<double> log_spaced(double lo, double hi, std::size_t count);

struct GammaMatchOptions {
    std::size_t knn_k = 15;
    std::vector<double> gamma_grid;  // empty: 40 values log-spaced in [1e-5, 1e-2]
    NegSampleConfig ns;              // reference run configuration
    std::size_t full_iters = 400;
    double theta = 0.5;
    int threads = 1;
    std::uint64_t seed = 1;
};

struct GammaMatchPoint {
    std::size_t n = 0;
    double gamma_eff = 0.0;   // grid weight whose full-batch span matches the reference
    double ns_span = 0.0;     // span of the sampled-repulsion reference
    double matched_span = 0.0;
    bool skipped = false;     // reference diverged; excluded from the fit
};

struct GammaMatchResult {
    std::vector<GammaMatchPoint> points;
    LinearFit fit; // log gamma_eff against log n, over non-skipped points
};

// For each subsample size: run the sampled-repulsion optimizer once, then the
// grid of full-batch runs from the same start, and keep the grid weight whose
// final span agrees best with the reference. The fit summarizes how that
// weight scales with n.
GammaMatchResult estimate_effective_gamma(const Matrix& data,
                                          const std::vector<std::size_t>& sizes,
                                          const GammaMatchOptions& opt = {});

} // namespace nesp
