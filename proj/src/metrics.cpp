#include "nesp/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "nesp/common.hpp"
#include "nesp/dataset.hpp"
#include "nesp/knn.hpp"
#include "nesp/parallel.hpp"
#include "nesp/pca.hpp"
#include "nesp/rng.hpp"

namespace nesp {
namespace {

// k nearest layout neighbors of point i, self excluded, ties to the smaller
// index. Bounded max-heap over a linear scan.
void layout_neighbors(const Embedding& y, std::size_t i, std::size_t k,
                      std::vector<std::pair<double, std::uint32_t>>& heap) {
    heap.clear();
    const double* yi = y.point(i);
    auto worse = [](const std::pair<double, std::uint32_t>& a,
                    const std::pair<double, std::uint32_t>& b) { return a < b; };
    for (std::size_t j = 0; j < y.n; ++j) {
        if (j == i) continue;
        const double d2 = squared_distance2(yi, y.point(j));
        const std::pair<double, std::uint32_t> cand{d2, static_cast<std::uint32_t>(j)};
        if (heap.size() < k) {
            heap.push_back(cand);
            std::push_heap(heap.begin(), heap.end(), worse);
        } else if (cand < heap.front()) {
            std::pop_heap(heap.begin(), heap.end(), worse);
            heap.back() = cand;
            std::push_heap(heap.begin(), heap.end(), worse);
        }
    }
}

std::vector<std::size_t> pick_points(std::size_t n, std::size_t wanted, std::uint64_t seed,
                                     std::uint64_t stream) {
    std::vector<std::size_t> points;
    if (wanted == 0 || wanted >= n) {
        points.resize(n);
        for (std::size_t i = 0; i < n; ++i) points[i] = i;
    } else {
        Rng rng = Rng::stream(seed, stream);
        points = rng.sample_without_replacement(n, wanted);
        std::sort(points.begin(), points.end());
    }
    return points;
}

} // namespace

double knn_recall(const AffinityGraph& a, const Embedding& y, std::size_t k,
                  std::size_t n_samples, std::uint64_t seed, int threads) {
    if (a.n != y.n) throw UsageError("knn_recall: affinity/layout size mismatch");
    if (k == 0 || k >= a.n) throw UsageError("knn_recall: need 0 < k < n");
    if (a.adj_offset.size() != a.n + 1)
        throw UsageError("knn_recall: adjacency arrays not built");

    const std::vector<std::size_t> points = pick_points(a.n, n_samples, seed, 0x7eca11ULL);
    std::vector<double> hit(points.size(), 0.0);
    parallel_for(0, points.size(), resolve_threads(threads), [&](std::size_t t) {
        const std::size_t i = points[t];

        // Strongest-k affinity neighbors: weight descending, index ascending.
        thread_local std::vector<std::pair<double, std::uint32_t>> order;
        order.clear();
        for (std::size_t e = a.adj_offset[i]; e < a.adj_offset[i + 1]; ++e)
            order.emplace_back(-a.adj_value[e], a.adj_index[e]);
        const std::size_t kept = std::min(k, order.size());
        std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(kept),
                          order.end());

        thread_local std::vector<std::pair<double, std::uint32_t>> heap;
        layout_neighbors(y, i, k, heap);
        thread_local std::vector<std::uint32_t> found;
        found.clear();
        for (const auto& [d2, j] : heap) found.push_back(j);
        std::sort(found.begin(), found.end());

        std::size_t inter = 0;
        for (std::size_t e = 0; e < kept; ++e)
            if (std::binary_search(found.begin(), found.end(), order[e].second)) ++inter;
        hit[t] = static_cast<double>(inter) / static_cast<double>(k);
    });

    double acc = 0.0;
    for (const double h : hit) acc += h;
    return acc / static_cast<double>(hit.size());
}

double distance_correlation(const Embedding& y1, const Embedding& y2, std::size_t subsample,
                            std::uint64_t seed, bool* degenerate) {
    if (y1.n != y2.n) throw UsageError("distance_correlation: layout size mismatch");
    if (y1.n < 2) throw UsageError("distance_correlation: need at least 2 points");
    if (degenerate) *degenerate = false;

    const std::vector<std::size_t> pick =
        pick_points(y1.n, subsample == 0 ? y1.n : subsample, seed, 0xd15c0ULL);
    const std::size_t m = pick.size();

    // Pass 1: row sums of both distance matrices (diagonal is zero).
    std::vector<double> row1(m, 0.0), row2(m, 0.0);
    double grand1 = 0.0, grand2 = 0.0;
    for (std::size_t p = 0; p < m; ++p) {
        for (std::size_t q = p + 1; q < m; ++q) {
            const double d1 =
                std::sqrt(squared_distance2(y1.point(pick[p]), y1.point(pick[q])));
            const double d2 =
                std::sqrt(squared_distance2(y2.point(pick[p]), y2.point(pick[q])));
            row1[p] += d1;
            row1[q] += d1;
            row2[p] += d2;
            row2[q] += d2;
            grand1 += 2.0 * d1;
            grand2 += 2.0 * d2;
        }
    }
    const double dm = static_cast<double>(m);
    for (std::size_t p = 0; p < m; ++p) {
        row1[p] /= dm;
        row2[p] /= dm;
    }
    grand1 /= dm * dm;
    grand2 /= dm * dm;

    // Pass 2: products of the double-centered entries, diagonal included.
    double cov = 0.0, var1 = 0.0, var2 = 0.0;
    for (std::size_t p = 0; p < m; ++p) {
        for (std::size_t q = 0; q < m; ++q) {
            double d1 = 0.0, d2 = 0.0;
            if (q != p) {
                d1 = std::sqrt(squared_distance2(y1.point(pick[p]), y1.point(pick[q])));
                d2 = std::sqrt(squared_distance2(y2.point(pick[p]), y2.point(pick[q])));
            }
            const double c1 = d1 - row1[p] - row1[q] + grand1;
            const double c2 = d2 - row2[p] - row2[q] + grand2;
            cov += c1 * c2;
            var1 += c1 * c1;
            var2 += c2 * c2;
        }
    }
    if (var1 <= 0.0 || var2 <= 0.0) {
        if (degenerate) *degenerate = true;
        return 0.0;
    }
    const double r2 = cov / std::sqrt(var1 * var2);
    return r2 <= 0.0 ? 0.0 : std::sqrt(r2);
}

double embedding_span(const Embedding& e) {
    if (e.n == 0) return 0.0;
    double lo = e.coords[0], hi = e.coords[0];
    for (const double v : e.coords) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return hi - lo;
}

LinearFit fit_log_log(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw UsageError("fit_log_log: need two or more matched samples");
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] <= 0.0 || y[i] <= 0.0) throw UsageError("fit_log_log: inputs must be positive");
        const double lx = std::log(x[i]);
        const double ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double m = static_cast<double>(x.size());
    const double denom = sxx - sx * sx / m;
    if (denom == 0.0) throw UsageError("fit_log_log: degenerate abscissa");
    LinearFit fit;
    fit.slope = (sxy - sx * sy / m) / denom;
    fit.intercept = (sy - fit.slope * sx) / m;
    return fit;
}

std::vector<double> log_spaced(double lo, double hi, std::size_t count) {
    if (count < 2 || lo <= 0.0 || hi <= lo) throw UsageError("log_spaced: bad range");
    std::vector<double> out(count);
    const double step = std::log(hi / lo) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i)
        out[i] = lo * std::exp(step * static_cast<double>(i));
    return out;
}

double match_gamma_by_span(const AffinityGraph& a, const Embedding& y0, double ref_span,
                           const std::vector<double>& gamma_grid, std::size_t full_iters,
                           double epsilon, const OptimOptions& opt, double* matched_span) {
    if (gamma_grid.empty()) throw UsageError("match_gamma_by_span: empty grid");
    if (ref_span <= 0.0) throw UsageError("match_gamma_by_span: reference span must be positive");
    Schedule sched;
    sched.total_iters = full_iters;
    sched.final_rho = 1.0;
    sched.early_iters = 0;

    double best_gamma = 0.0, best_span = 0.0, best = 1e300;
    for (const double gamma : gamma_grid) {
        if (gamma <= 0.0) throw UsageError("match_gamma_by_span: weights must be positive");
        const RunResult full = run_umap_full(a, y0, gamma, epsilon, sched, opt);
        if (full.status != RunStatus::Completed) continue;
        const double span = embedding_span(full.embedding);
        if (span <= 0.0) continue;
        const double dist = std::abs(std::log(span) - std::log(ref_span));
        if (dist < best) {
            best = dist;
            best_gamma = gamma;
            best_span = span;
        }
    }
    if (best_gamma == 0.0)
        throw DataError("match_gamma_by_span: no grid run produced a usable layout");
    if (matched_span) *matched_span = best_span;
    return best_gamma;
}

GammaMatchResult estimate_effective_gamma(const Matrix& data,
                                          const std::vector<std::size_t>& sizes,
                                          const GammaMatchOptions& opt) {
    if (sizes.empty()) throw UsageError("estimate_effective_gamma: no sizes");
    const std::vector<double> grid =
        opt.gamma_grid.empty() ? log_spaced(1e-5, 1e-2, 40) : opt.gamma_grid;

    GammaMatchResult out;
    for (const std::size_t n : sizes) {
        const Matrix x = subsample_rows(data, n, opt.seed);
        if (x.rows < opt.knn_k + 1)
            throw UsageError("estimate_effective_gamma: subsample smaller than k + 1");

        const NeighborGraph knn = build_knn(x, opt.knn_k, KnnAlgorithm::Auto, opt.threads);
        AffinityGraph aff = binary_affinities(symmetrize_union(knn));

        InitConfig init_cfg;
        init_cfg.seed = opt.seed;
        const Embedding y0 = make_init(x, init_cfg, Method::UmapNs);

        OptimOptions run_opt;
        run_opt.theta = opt.theta;
        run_opt.threads = opt.threads;

        GammaMatchPoint point;
        point.n = n;
        const RunResult ref = run_umap_ns(aff, y0, opt.ns, opt.seed, run_opt);
        if (ref.status != RunStatus::Completed) {
            point.skipped = true;
            out.points.push_back(point);
            continue;
        }
        point.ns_span = embedding_span(ref.embedding);
        point.gamma_eff = match_gamma_by_span(aff, y0, point.ns_span, grid, opt.full_iters,
                                              opt.ns.epsilon, run_opt, &point.matched_span);
        out.points.push_back(point);
    }

    std::vector<double> ns, gammas;
    for (const GammaMatchPoint& p : out.points) {
        if (p.skipped) continue;
        ns.push_back(static_cast<double>(p.n));
        gammas.push_back(p.gamma_eff);
    }
    if (ns.size() >= 2) out.fit = fit_log_log(ns, gammas);
    return out;
}

} // namespace nesp
