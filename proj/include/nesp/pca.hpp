#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "nesp/matrix.hpp"

namespace nesp {

struct PcaResult {
    Matrix projected;                       // n x d, mean-centered scores
    std::vector<double> explained_variance; // top-d covariance eigenvalues, descending
    bool rank_deficient = false;            // fewer informative directions than requested
};

// Projects onto the top-d principal components. Each component is oriented so
// that its largest-magnitude loading is positive (first such entry on ties).
// d > min(rows, cols) keeps all informative directions, zero-pads the rest and
// sets rank_deficient.
PcaResult pca_reduce(const Matrix& x, std::size_t d);

enum class Method { Tsne, UmapNs, UmapBh, Fa2, Le };

Method method_from_name(const std::string& name);
std::string method_name(Method m);

enum class InitMode { Pca, Random, Provided };

// How the raw layout is brought to the method's working scale.
struct ScaleRule {
    enum class Kind { Stddev, Range } kind = Kind::Stddev;
    double stddev = 1.0; // pooled coordinate standard deviation after scaling
    double lo = -1.0, hi = 1.0;

    static ScaleRule make_stddev(double s) { return {Kind::Stddev, s, 0.0, 0.0}; }
    static ScaleRule make_range(double lo, double hi) { return {Kind::Range, 0.0, lo, hi}; }
};

struct InitConfig {
    InitMode mode = InitMode::Pca;
    std::optional<ScaleRule> scale;  // empty: use the method's default rule
    std::uint64_t seed = 1;
    std::optional<Embedding> provided;
};

// Per-method default working scales for a fresh layout.
ScaleRule default_scale(Method m);

// Initial 2-D layout from data (pca), noise (random) or a caller-supplied
// layout (provided; rescaled by the active rule). Not defined for Method::Le,
// which computes its layout directly.
Embedding make_init(const Matrix& x, const InitConfig& cfg, Method method);

double pooled_stddev(const Embedding& e);

} // namespace nesp
