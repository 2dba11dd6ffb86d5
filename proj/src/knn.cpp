#include "nesp/knn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>

#include "nesp/parallel.hpp"

namespace nesp {

namespace {

double row_dist2(const double* a, const double* b, std::size_t dim) {
    double s = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
        const double diff = a[d] - b[d];
        s += diff * diff;
    }
    return s;
}

struct Hit {
    double dist2;
    std::uint32_t idx;
    bool operator<(const Hit& o) const { // max-heap ordering: farthest (then largest index) on top
        if (dist2 != o.dist2) return dist2 < o.dist2;
        return idx < o.idx;
    }
};

void sort_by_index(std::vector<Hit>& hits, std::vector<std::uint32_t>& nbr, std::vector<double>& d2) {
    std::sort(hits.begin(), hits.end(),
              [](const Hit& a, const Hit& b) { return a.idx < b.idx; });
    nbr.resize(hits.size());
    d2.resize(hits.size());
    for (std::size_t t = 0; t < hits.size(); ++t) {
        nbr[t] = hits[t].idx;
        d2[t] = hits[t].dist2;
    }
}

void exact_query(const Matrix& x, std::uint32_t i, std::size_t k, std::vector<Hit>& scratch,
                 std::vector<std::uint32_t>& nbr, std::vector<double>& d2) {
    scratch.clear();
    const double* xi = x.row(i);
    for (std::uint32_t j = 0; j < x.rows; ++j) {
        if (j == i) continue;
        scratch.push_back({row_dist2(xi, x.row(j), x.cols), j});
    }
    std::partial_sort(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(k),
                      scratch.end());
    scratch.resize(k);
    sort_by_index(scratch, nbr, d2);
}

// Vantage-point tree over true Euclidean distances (the triangle inequality
// needs them); squared distances are restored on output. Vantage point is the
// first index of each range, split at the median distance, ties resolved by
// node index so results match exact search even on degenerate data.
class VpTree {
public:
    VpTree(const Matrix& x) : x_(x), items_(x.rows) {
        std::iota(items_.begin(), items_.end(), 0u);
        nodes_.reserve(2 * x.rows);
        root_ = build(0, x.rows);
    }

    void query(std::uint32_t q, std::size_t k, std::vector<Hit>& heap,
               std::vector<std::uint32_t>& nbr, std::vector<double>& d2) const {
        heap.clear();
        double tau = std::numeric_limits<double>::infinity();
        search(root_, q, k, heap, tau);
        std::sort_heap(heap.begin(), heap.end());
        for (auto& h : heap) h.dist2 = h.dist2 * h.dist2; // back to squared
        sort_by_index(heap, nbr, d2);
    }

private:
    struct Node {
        std::uint32_t point = 0;
        double radius = 0.0;
        int inside = -1, outside = -1;
        std::uint32_t bucket_begin = 0, bucket_count = 0; // leaf range into items_
    };

    double dist(std::uint32_t a, std::uint32_t b) const {
        return std::sqrt(row_dist2(x_.row(a), x_.row(b), x_.cols));
    }

    int build(std::size_t lo, std::size_t hi) {
        if (lo >= hi) return -1;
        const int id = static_cast<int>(nodes_.size());
        nodes_.emplace_back();
        if (hi - lo <= kLeafSize) {
            nodes_[id].bucket_begin = static_cast<std::uint32_t>(lo);
            nodes_[id].bucket_count = static_cast<std::uint32_t>(hi - lo);
            return id;
        }
        const std::uint32_t vp = items_[lo];
        nodes_[id].point = vp;
        nodes_[id].bucket_count = 0;
        const std::size_t mid = lo + 1 + (hi - lo - 1) / 2;
        std::nth_element(items_.begin() + static_cast<std::ptrdiff_t>(lo + 1),
                         items_.begin() + static_cast<std::ptrdiff_t>(mid),
                         items_.begin() + static_cast<std::ptrdiff_t>(hi),
                         [&](std::uint32_t a, std::uint32_t b) {
                             const double da = dist(vp, a), db = dist(vp, b);
                             if (da != db) return da < db;
                             return a < b;
                         });
        nodes_[id].radius = dist(vp, items_[mid]);
        const int in = build(lo + 1, mid);
        const int out = build(mid, hi);
        nodes_[id].inside = in;
        nodes_[id].outside = out;
        return id;
    }

    void consider(std::uint32_t q, std::uint32_t cand, double d, std::size_t k,
                  std::vector<Hit>& heap, double& tau) const {
        if (cand == q) return;
        const Hit h{d, cand};
        if (heap.size() < k) {
            heap.push_back(h);
            std::push_heap(heap.begin(), heap.end());
        } else if (h < heap.front()) {
            std::pop_heap(heap.begin(), heap.end());
            heap.back() = h;
            std::push_heap(heap.begin(), heap.end());
        }
        if (heap.size() == k) tau = heap.front().dist2;
    }

    void search(int id, std::uint32_t q, std::size_t k, std::vector<Hit>& heap, double& tau) const {
        if (id < 0) return;
        const Node& node = nodes_[id];
        if (node.bucket_count > 0) {
            for (std::uint32_t t = 0; t < node.bucket_count; ++t) {
                const std::uint32_t cand = items_[node.bucket_begin + t];
                consider(q, cand, dist(q, cand), k, heap, tau);
            }
            return;
        }
        const double d = dist(q, node.point);
        consider(q, node.point, d, k, heap, tau);
        if (d < node.radius) {
            if (d - tau <= node.radius) search(node.inside, q, k, heap, tau);
            if (d + tau >= node.radius) search(node.outside, q, k, heap, tau);
        } else {
            if (d + tau >= node.radius) search(node.outside, q, k, heap, tau);
            if (d - tau <= node.radius) search(node.inside, q, k, heap, tau);
        }
    }

    static constexpr std::size_t kLeafSize = 16;
    const Matrix& x_;
    std::vector<std::uint32_t> items_;
    std::vector<Node> nodes_;
    int root_ = -1;
};

} // namespace

NeighborGraph build_knn(const Matrix& x, std::size_t k, KnnAlgorithm algo, int threads) {
    if (x.rows < 2) throw UsageError("build_knn: need at least two points");
    if (k == 0 || k >= x.rows)
        throw UsageError("build_knn: k must be in [1, n-1], got " + std::to_string(k));
    if (algo == KnnAlgorithm::Auto)
        algo = x.rows <= 20000 ? KnnAlgorithm::Exact : KnnAlgorithm::VpTree;

    NeighborGraph g;
    g.n = x.rows;
    g.k = k;
    g.directed = true;
    g.neighbors.resize(x.rows);
    g.dist2.resize(x.rows);

    if (algo == KnnAlgorithm::Exact) {
        parallel_for(0, x.rows, threads, [&](std::size_t i) {
            thread_local std::vector<Hit> scratch;
            exact_query(x, static_cast<std::uint32_t>(i), k, scratch, g.neighbors[i], g.dist2[i]);
        });
    } else {
        VpTree tree(x);
        parallel_for(0, x.rows, threads, [&](std::size_t i) {
            thread_local std::vector<Hit> heap;
            tree.query(static_cast<std::uint32_t>(i), k, heap, g.neighbors[i], g.dist2[i]);
        });
    }
    return g;
}

NeighborGraph symmetrize_union(const NeighborGraph& g) {
    NeighborGraph u;
    u.n = g.n;
    u.k = g.k;
    u.directed = false;
    u.neighbors.resize(g.n);
    u.dist2.resize(g.n);
    for (std::size_t i = 0; i < g.n; ++i) {
        for (std::size_t t = 0; t < g.neighbors[i].size(); ++t) {
            const std::uint32_t j = g.neighbors[i][t];
            u.neighbors[i].push_back(j);
            u.dist2[i].push_back(g.dist2[i][t]);
            u.neighbors[j].push_back(static_cast<std::uint32_t>(i));
            u.dist2[j].push_back(g.dist2[i][t]);
        }
    }
    for (std::size_t i = 0; i < g.n; ++i) {
        auto& nbr = u.neighbors[i];
        auto& d2 = u.dist2[i];
        std::vector<std::size_t> order(nbr.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return nbr[a] < nbr[b]; });
        std::vector<std::uint32_t> snbr;
        std::vector<double> sd2;
        snbr.reserve(nbr.size());
        sd2.reserve(nbr.size());
        for (std::size_t t : order) {
            if (!snbr.empty() && snbr.back() == nbr[t]) continue; // both directions present
            snbr.push_back(nbr[t]);
            sd2.push_back(d2[t]);
        }
        nbr = std::move(snbr);
        d2 = std::move(sd2);
    }
    return u;
}

std::vector<std::uint32_t> degrees(const NeighborGraph& g) {
    if (g.directed) throw UsageError("degrees: expects an undirected graph");
    std::vector<std::uint32_t> h(g.n);
    for (std::size_t i = 0; i < g.n; ++i) h[i] = static_cast<std::uint32_t>(g.neighbors[i].size());
    return h;
}

std::vector<std::uint32_t> connected_components(const NeighborGraph& g) {
    if (g.directed) throw UsageError("connected_components: expects an undirected graph");
    const std::uint32_t unseen = std::numeric_limits<std::uint32_t>::max();
    std::vector<std::uint32_t> label(g.n, unseen);
    std::vector<std::uint32_t> stack;
    for (std::size_t s = 0; s < g.n; ++s) {
        if (label[s] != unseen) continue;
        const auto root = static_cast<std::uint32_t>(s); // smallest index: scan order guarantees it
        stack.push_back(root);
        label[s] = root;
        while (!stack.empty()) {
            const std::uint32_t v = stack.back();
            stack.pop_back();
            for (std::uint32_t w : g.neighbors[v]) {
                if (label[w] == unseen) {
                    label[w] = root;
                    stack.push_back(w);
                }
            }
        }
    }
    return label;
}

std::size_t count_components(const std::vector<std::uint32_t>& labels) {
    std::size_t c = 0;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == i) ++c;
    return c;
}

std::size_t edge_count(const NeighborGraph& g) {
    std::size_t total = 0;
    for (const auto& nbr : g.neighbors) total += nbr.size();
    return g.directed ? total : total / 2;
}

} // namespace nesp
