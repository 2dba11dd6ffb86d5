#include "nesp/affinity.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>

#include "nesp/parallel.hpp"

namespace nesp {

void AffinityGraph::build_adjacency() {
    adj_offset.assign(n + 1, 0);
    for (const auto& e : edges) {
        ++adj_offset[e.i + 1];
        ++adj_offset[e.j + 1];
    }
    for (std::size_t i = 0; i < n; ++i) adj_offset[i + 1] += adj_offset[i];
    adj_index.resize(2 * edges.size());
    adj_value.resize(2 * edges.size());
    std::vector<std::size_t> cursor(adj_offset.begin(), adj_offset.end() - 1);
    for (const auto& e : edges) {
        adj_index[cursor[e.i]] = e.j;
        adj_value[cursor[e.i]++] = e.v;
        adj_index[cursor[e.j]] = e.i;
        adj_value[cursor[e.j]++] = e.v;
    }
}

double AffinityGraph::p_normalizer() const {
    return kind == AffinityKind::GaussianPerplexity ? static_cast<double>(n) : total_mass;
}

double AffinityGraph::gradient_weight_scale() const {
    return static_cast<double>(n) / p_normalizer();
}

namespace {

// Entropy (nats) and conditional weights for one point at a given bandwidth.
// Distances are shifted by their minimum before exponentiation; the shift
// cancels in the normalization and keeps exp() away from underflow.
struct EntropyEval {
    double entropy_nats;
    double perplexity;
};

EntropyEval eval_entropy(const std::vector<double>& shifted_d2, double sigma,
                         std::vector<double>* weights = nullptr) {
    const double beta = 1.0 / (2.0 * sigma * sigma);
    double sum = 0.0, weighted_d2 = 0.0;
    const std::size_t k = shifted_d2.size();
    if (weights) weights->resize(k);
    for (std::size_t t = 0; t < k; ++t) {
        const double w = std::exp(-beta * shifted_d2[t]);
        if (weights) (*weights)[t] = w;
        sum += w;
        weighted_d2 += w * shifted_d2[t];
    }
    // The shift leaves at least one exact zero, so sum >= 1 and nothing here
    // can underflow to a degenerate distribution.
    const double h = std::log(sum) + beta * weighted_d2 / sum;
    if (weights)
        for (double& w : *weights) w /= sum;
    return {h, std::exp(h)};
}

struct CalibrationResult {
    double sigma;
    bool flagged;
};

CalibrationResult calibrate_point(const std::vector<double>& shifted_d2, double perplexity,
                                  const PerplexityOptions& opt, std::vector<double>& weights) {
    double lo = opt.sigma_lo, hi = opt.sigma_hi;
    const double target = perplexity;
    const double tol = opt.tolerance * target;

    double best_sigma = std::sqrt(lo * hi);
    double best_err = std::numeric_limits<double>::infinity();
    // Perplexity grows with sigma; track the values seen at the bracket ends
    // and check that each midpoint stays between them.
    double perp_lo = -std::numeric_limits<double>::infinity();
    double perp_hi = std::numeric_limits<double>::infinity();

    bool converged = false;
    for (int it = 0; it < opt.max_iterations; ++it) {
        const double mid = std::sqrt(lo * hi); // geometric: the bracket spans 40 decades
        const EntropyEval ev = eval_entropy(shifted_d2, mid);
        if (ev.perplexity < perp_lo - 1e-8 || ev.perplexity > perp_hi + 1e-8)
            throw std::logic_error("perplexity_calibrate: entropy not monotone in sigma");
        const double err = std::abs(ev.perplexity - target);
        if (err < best_err) {
            best_err = err;
            best_sigma = mid;
        }
        if (err <= tol) {
            converged = true;
            best_sigma = mid;
            break;
        }
        if (ev.perplexity < target) {
            lo = mid;
            perp_lo = ev.perplexity;
        } else {
            hi = mid;
            perp_hi = ev.perplexity;
        }
    }
    eval_entropy(shifted_d2, best_sigma, &weights);
    return {best_sigma, !converged};
}

} // namespace

AffinityGraph perplexity_calibrate(const NeighborGraph& g, double perplexity,
                                   const PerplexityOptions& opt, int threads) {
    if (!g.directed) throw UsageError("perplexity_calibrate: expects the directed kNN graph");
    if (perplexity < 2.0) throw UsageError("perplexity_calibrate: perplexity must be >= 2");
    for (std::size_t i = 0; i < g.n; ++i)
        if (g.neighbors[i].size() < static_cast<std::size_t>(std::ceil(perplexity)))
            throw UsageError("perplexity_calibrate: node " + std::to_string(i) +
                             " has fewer neighbors than the perplexity");

    AffinityGraph a;
    a.n = g.n;
    a.kind = AffinityKind::GaussianPerplexity;
    a.sigmas.assign(g.n, 0.0);
    a.flagged.assign(g.n, 0);

    // Conditional weights p_{j|i}, aligned with g.neighbors.
    std::vector<std::vector<double>> cond(g.n);
    parallel_for(0, g.n, threads, [&](std::size_t i) {
        const auto& d2 = g.dist2[i];
        const double dmin = *std::min_element(d2.begin(), d2.end());
        std::vector<double> shifted(d2.size());
        for (std::size_t t = 0; t < d2.size(); ++t) shifted[t] = d2[t] - dmin;
        const CalibrationResult r = calibrate_point(shifted, perplexity, opt, cond[i]);
        a.sigmas[i] = r.sigma;
        a.flagged[i] = r.flagged ? 1 : 0;
    });

    std::size_t flagged_count = 0;
    for (auto f : a.flagged) flagged_count += f;
    if (flagged_count > 0)
        std::cerr << "[nesp] warning: perplexity calibration did not converge for "
                  << flagged_count << " of " << g.n << " points\n";

    // Symmetrize over the union of directions: v_ij = (p_i|j + p_j|i) / 2,
    // where a missing direction contributes zero.
    std::vector<AffinityEdge> directed;
    directed.reserve(g.n * (g.neighbors.empty() ? 0 : g.neighbors[0].size()));
    for (std::size_t i = 0; i < g.n; ++i) {
        for (std::size_t t = 0; t < g.neighbors[i].size(); ++t) {
            const std::uint32_t j = g.neighbors[i][t];
            const std::uint32_t lo = std::min<std::uint32_t>(i, j);
            const std::uint32_t hi = std::max<std::uint32_t>(i, j);
            directed.push_back({lo, hi, 0.5 * cond[i][t]});
        }
    }
    std::sort(directed.begin(), directed.end(), [](const AffinityEdge& x, const AffinityEdge& y) {
        if (x.i != y.i) return x.i < y.i;
        return x.j < y.j;
    });
    for (const auto& e : directed) {
        if (!a.edges.empty() && a.edges.back().i == e.i && a.edges.back().j == e.j)
            a.edges.back().v += e.v;
        else
            a.edges.push_back(e);
    }
    double mass = 0.0;
    for (const auto& e : a.edges) mass += e.v;
    a.total_mass = 2.0 * mass;
    a.build_adjacency();
    return a;
}

AffinityGraph binary_affinities(const NeighborGraph& g) {
    if (g.directed) throw UsageError("binary_affinities: expects the symmetrized graph");
    AffinityGraph a;
    a.n = g.n;
    a.kind = AffinityKind::BinaryKnn;
    for (std::size_t i = 0; i < g.n; ++i)
        for (std::uint32_t j : g.neighbors[i])
            if (j > i) a.edges.push_back({static_cast<std::uint32_t>(i), j, 1.0});
    std::sort(a.edges.begin(), a.edges.end(), [](const AffinityEdge& x, const AffinityEdge& y) {
        if (x.i != y.i) return x.i < y.i;
        return x.j < y.j;
    });
    a.total_mass = 2.0 * static_cast<double>(a.edges.size());
    a.build_adjacency();
    return a;
}

std::vector<NormalizedEntry> normalized_view(const AffinityGraph& a) {
    const double z = a.p_normalizer();
    if (z <= 0.0) throw DataError("normalized_view: empty affinity graph");
    std::vector<NormalizedEntry> out;
    out.reserve(2 * a.edges.size());
    for (const auto& e : a.edges) {
        out.push_back({e.i, e.j, e.v / z});
        out.push_back({e.j, e.i, e.v / z});
    }
    return out;
}

} // namespace nesp
