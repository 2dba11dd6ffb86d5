// Fast acceptance gate: criteria AC-1 through AC-5, one result line each.
// Every check measures the library against an independent oracle (central
// finite differences, a dense Jacobi eigensolver, closed-form equilibria,
// brute-force neighborhoods) and prints PASS or FAIL with the measured value.
// Exit status is the number of failed criteria.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <string>
#include <vector>

#include "nesp/affinity.hpp"
#include "nesp/dataset.hpp"
#include "nesp/forces.hpp"
#include "nesp/knn.hpp"
#include "nesp/metrics.hpp"
#include "nesp/optimizer.hpp"
#include "nesp/pca.hpp"
#include "nesp/quadtree.hpp"
#include "nesp/rng.hpp"
#include "nesp/spectral.hpp"

#include "oracles.hpp"

using namespace nesp;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), pattern, a, b, c);
    return buf;
}

double cauchy_w(double d2) { return 1.0 / (1.0 + d2); }

// Scalar potentials whose gradients the closed-form fields implement. Sums run
// over ordered pairs, hence the 1/4 on the unordered edge list.
double attraction_potential(const AffinityGraph& a, const Embedding& y, double weight_scale) {
    double s = 0.0;
    for (const AffinityEdge& e : a.edges) {
        const double d2 = squared_distance2(y.point(e.i), y.point(e.j));
        s += weight_scale * e.v * -std::log(cauchy_w(d2));
    }
    return 2.0 * s / 4.0;
}

double tsne_repulsion_potential(const Embedding& y) {
    double z = 0.0;
    for (std::size_t i = 0; i < y.n; ++i)
        for (std::size_t j = 0; j < y.n; ++j)
            if (j != i) z += cauchy_w(squared_distance2(y.point(i), y.point(j)));
    return -(double(y.n) / 4.0) * std::log(z);
}

double umap_repulsion_potential(const Embedding& y, double gamma, double epsilon) {
    double s = 0.0;
    for (std::size_t i = 0; i < y.n; ++i)
        for (std::size_t j = 0; j < y.n; ++j) {
            if (j == i) continue;
            const double d2 = squared_distance2(y.point(i), y.point(j));
            s += std::log((d2 + epsilon) / (1.0 + d2));
        }
    return gamma / (4.0 * (1.0 - epsilon)) * s;
}

double max_fd_rel_err(const ForceField& field, const Embedding& y,
                      const std::function<double(const Embedding&)>& potential) {
    double worst = 0.0;
    for (std::size_t i = 0; i < y.n; ++i)
        for (int c = 0; c < 2; ++c) {
            const double fd = oracle::fd_coordinate(potential, y, i, c);
            const double got = field.values[2 * i + c];
            const double scale = std::max({std::fabs(fd), std::fabs(got), 1e-9});
            worst = std::max(worst, std::fabs(got - fd) / scale);
        }
    return worst;
}

struct SmallProblem {
    AffinityGraph aff;
    Embedding y;
};

SmallProblem small_problem(std::size_t n, std::uint64_t seed) {
    Matrix x(n, 3);
    Rng rng(seed);
    for (double& v : x.values) v = rng.normal();
    SmallProblem p;
    p.aff = perplexity_calibrate(build_knn(x, 6, KnnAlgorithm::Exact, 1), 4.0, {}, 1);
    p.y.n = n;
    p.y.coords.resize(2 * n);
    for (double& c : p.y.coords) c = rng.normal();
    return p;
}

// Gradients of the full objectives match central finite differences on small
// random instances, across the exaggeration range and for the smoothed
// repulsion.
Outcome ac1() {
    const double tol = 1e-4;
    double worst = 0.0;
    for (const std::uint64_t seed : {101ULL, 202ULL, 303ULL}) {
        const SmallProblem p = small_problem(10, seed);
        const double ws = p.aff.gradient_weight_scale();
        for (const double rho : {1.0, 4.0, 30.0}) {
            ForceSpec spec;
            spec.method = ForceMethod::Tsne;
            spec.rho = rho;
            const ForceField f = assemble_gradient(spec, &p.aff, nullptr, nullptr, p.y, 1);
            worst = std::max(worst, max_fd_rel_err(f, p.y, [&](const Embedding& e) {
                return attraction_potential(p.aff, e, ws) - tsne_repulsion_potential(e) / rho;
            }));
        }
        const double gamma = 1.0, epsilon = 1e-3;
        const ForceField rep = umap_repulsion_exact(p.y, gamma, epsilon, 1);
        worst = std::max(worst, max_fd_rel_err(rep, p.y, [&](const Embedding& e) {
            return umap_repulsion_potential(e, gamma, epsilon);
        }));
    }
    return {worst <= tol, fmt("max gradient rel err %.2e, tol 1e-4", worst)};
}

// Tree-approximated repulsion at theta 0.5 stays within the stated field and
// partition-sum error; theta 0 reproduces the exact pair sums. Standard-normal
// layouts, worst case over three seeds. (The approximation error rises with
// layout spread: around 1.6% median / 1.05% Z at 5x-spread layouts.)
Outcome ac2() {
    const std::size_t n = 2000;
    double worst_median = 0.0, worst_z = 0.0, worst_exactness = 0.0;
    for (const std::uint64_t seed : {2024ULL, 7ULL, 99ULL}) {
        Embedding y;
        y.n = n;
        y.coords.resize(2 * n);
        Rng rng(seed);
        for (double& v : y.coords) v = rng.normal();

        const ForceField exact = tsne_repulsion_exact(y, 1);
        const QuadTree tree(y);
        QuadTree::Kernel kernel;
        kernel.type = QuadTree::Kernel::Type::TsneW2;

        const ForceField approx = tree.repulsion(y, kernel, 0.5, nullptr, 1);
        std::vector<double> errs;
        errs.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double dx = approx.values[2 * i] - exact.values[2 * i];
            const double dy = approx.values[2 * i + 1] - exact.values[2 * i + 1];
            const double denom = std::hypot(exact.values[2 * i], exact.values[2 * i + 1]);
            if (denom > 0.0) errs.push_back(std::hypot(dx, dy) / denom);
        }
        std::sort(errs.begin(), errs.end());
        worst_median = std::max(worst_median, errs[errs.size() / 2]);
        worst_z = std::max(worst_z,
                           std::fabs(approx.z_sum - exact.z_sum) / exact.z_sum);

        const ForceField zero = tree.repulsion(y, kernel, 0.0, nullptr, 1);
        worst_exactness = std::max(worst_exactness,
                                   std::fabs(zero.z_sum - exact.z_sum) /
                                       std::max(std::fabs(exact.z_sum), 1.0));
        for (std::size_t t = 0; t < zero.values.size(); ++t) {
            const double scale =
                std::max({std::fabs(zero.values[t]), std::fabs(exact.values[t]), 1.0});
            worst_exactness = std::max(
                worst_exactness, std::fabs(zero.values[t] - exact.values[t]) / scale);
        }
    }

    const bool pass = worst_median <= 0.02 && worst_z <= 0.01 && worst_exactness <= 1e-10;
    return {pass, fmt("median force err %.4f (tol 0.02), Z err %.5f (tol 0.01), "
                      "theta-0 dev %.1e (tol 1e-10), worst of 3 layouts",
                      worst_median, worst_z, worst_exactness)};
}

// Dense spectral oracle on graphs small enough to solve exactly.
namespace spectral_oracle {

std::vector<double> dense_l_norm(const AffinityGraph& a) {
    const std::size_t n = a.n;
    std::vector<double> w(n * n, 0.0), deg(n, 0.0);
    for (const AffinityEdge& e : a.edges) {
        w[e.i * n + e.j] += e.v;
        w[e.j * n + e.i] += e.v;
        deg[e.i] += e.v;
        deg[e.j] += e.v;
    }
    std::vector<double> l(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double norm =
                deg[i] > 0.0 && deg[j] > 0.0 ? 1.0 / std::sqrt(deg[i] * deg[j]) : 0.0;
            l[i * n + j] = (i == j ? deg[i] : 0.0) * norm - w[i * n + j] * norm;
        }
    return l;
}

std::vector<double> back_map(const std::vector<double>& b, const std::vector<double>& deg) {
    std::vector<double> a(b.size());
    double norm = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) {
        a[i] = deg[i] > 0.0 ? b[i] / std::sqrt(deg[i]) : 0.0;
        norm += a[i] * a[i];
    }
    norm = std::sqrt(norm);
    for (double& v : a) v /= norm;
    return a;
}

} // namespace spectral_oracle

std::vector<double> column(const Matrix& m, std::size_t c) {
    std::vector<double> v(m.rows);
    for (std::size_t i = 0; i < m.rows; ++i) v[i] = m.at(i, c);
    return v;
}

double abs_cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    return std::fabs(dot) / std::sqrt(na * nb);
}

Outcome ac3() {
    double worst_lambda = 0.0, worst_corr = 1.0;

    auto check_graph = [&](const AffinityGraph& a) {
        const std::size_t n = a.n;
        const SpectralResult r = laplacian_eigenmaps(a, 2, {});
        if (r.disconnected) throw std::runtime_error("oracle graph unexpectedly disconnected");

        const oracle::EigenSystem sys =
            oracle::jacobi_eigen(spectral_oracle::dense_l_norm(a), n);
        std::vector<double> deg(n, 0.0);
        for (const AffinityEdge& e : a.edges) {
            deg[e.i] += e.v;
            deg[e.j] += e.v;
        }
        for (std::size_t c = 0; c < 2; ++c) {
            worst_lambda =
                std::max(worst_lambda, std::fabs(r.eigenvalues[c] - sys.values[c + 1]));
            const std::vector<double> want = spectral_oracle::back_map(
                {sys.vectors.begin() + std::ptrdiff_t((c + 1) * n),
                 sys.vectors.begin() + std::ptrdiff_t((c + 2) * n)},
                deg);
            worst_corr = std::min(worst_corr, abs_cosine(column(r.vectors, c), want));
        }
        return r;
    };

    const Matrix x1 = gen_gaussian_chain(4, 50, 5, 5.0, 13);
    const AffinityGraph binary =
        binary_affinities(symmetrize_union(build_knn(x1, 8, KnnAlgorithm::Exact, 1)));
    const SpectralResult spec = check_graph(binary);

    const Matrix x2 = gen_gaussian_chain(3, 60, 5, 5.0, 17);
    const AffinityGraph gauss =
        perplexity_calibrate(build_knn(x2, 20, KnnAlgorithm::Exact, 1), 8.0, {}, 1);
    check_graph(gauss);

    // The exaggeration-limit power iteration lands in the same spectral plane.
    const GraphOperators ops = build_operators(binary);
    Embedding y0;
    y0.n = binary.n;
    y0.coords.resize(2 * binary.n);
    Rng rng(31);
    for (double& v : y0.coords) v = rng.normal();
    const LimitIterationResult lim = tsne_limit_iteration(ops, y0, 6000, true, 1);

    // Orthonormal basis of the eigenmap plane, then energy of each column in it.
    std::vector<double> b0 = column(spec.vectors, 0), b1 = column(spec.vectors, 1);
    double n0 = 0.0;
    for (const double v : b0) n0 += v * v;
    for (double& v : b0) v /= std::sqrt(n0);
    double proj = 0.0;
    for (std::size_t i = 0; i < b1.size(); ++i) proj += b0[i] * b1[i];
    double n1 = 0.0;
    for (std::size_t i = 0; i < b1.size(); ++i) {
        b1[i] -= proj * b0[i];
        n1 += b1[i] * b1[i];
    }
    for (double& v : b1) v /= std::sqrt(n1);

    double min_energy = 1.0;
    for (int c = 0; c < 2; ++c) {
        double d0 = 0.0, d1 = 0.0, norm = 0.0;
        for (std::size_t i = 0; i < binary.n; ++i) {
            const double v = c == 0 ? lim.embedding.x(i) : lim.embedding.y(i);
            d0 += v * b0[i];
            d1 += v * b1[i];
            norm += v * v;
        }
        min_energy = std::min(min_energy, (d0 * d0 + d1 * d1) / norm);
    }

    const bool pass =
        worst_lambda <= 1e-8 && worst_corr >= 0.999 && !lim.degenerate && min_energy >= 0.99;
    return {pass, fmt("max eigenvalue dev %.1e (tol 1e-8), min |corr| %.5f (floor 0.999), "
                      "limit-iteration plane energy %.4f (floor 0.99)",
                      worst_lambda, worst_corr, min_energy)};
}

Outcome ac4() {
    NeighborGraph g;
    g.n = 2;
    g.k = 1;
    g.directed = false;
    g.neighbors = {{1}, {0}};
    g.dist2 = {{1.0}, {1.0}};

    auto settle = [&](bool edge_rep) {
        Embedding y0;
        y0.n = 2;
        y0.coords = {0.0, 0.0, 0.5, 0.0};
        Fa2Options cfg;
        cfg.iters = 5000;
        cfg.edge_repulsion = edge_rep;
        cfg.force_tolerance = 1e-12;
        OptimOptions opt;
        opt.theta = 0.0;
        const RunResult r = run_fa2(g, y0, cfg, opt);
        return std::hypot(r.embedding.x(1) - r.embedding.x(0),
                          r.embedding.y(1) - r.embedding.y(0));
    };
    const double d_with = settle(true);
    const double d_without = settle(false);

    // Quadrupled attraction: list the edge four times, keep unit degree masses.
    // The equilibrium shrinks by 1/sqrt(4), from 2 to 1.
    NeighborGraph g4 = g;
    g4.neighbors = {{1, 1, 1, 1}, {0, 0, 0, 0}};
    g4.dist2 = {{1.0, 1.0, 1.0, 1.0}, {1.0, 1.0, 1.0, 1.0}};
    const std::vector<std::uint32_t> unit_deg = {1, 1};
    auto axial = [&](double d) {
        Embedding y;
        y.n = 2;
        y.coords = {0.0, 0.0, d, 0.0};
        return fa2_forces(g4, unit_deg, y, true, 1).values[2];
    };
    double lo = 0.05, hi = 50.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (axial(mid) > 0.0 ? hi : lo) = mid;
    }
    const double d_quad = 0.5 * (lo + hi);

    const bool pass = std::fabs(d_with - 2.0) / 2.0 <= 0.01 &&
                      std::fabs(d_without - 1.0) <= 0.01 &&
                      std::fabs(d_quad - 1.0) <= 0.01;
    return {pass, fmt("equilibrium %.4f (want 2), %.4f (want 1), x4 attraction %.4f "
                      "(want 1), tol 1%%",
                      d_with, d_without, d_quad)};
}

// Cluster-chain trade-off: high exaggeration recovers the chain ordering,
// none recovers the clusters, and graph recall decreases with exaggeration.
Outcome ac5() {
    const std::size_t clusters = 10, per = 200;
    const Matrix x = gen_gaussian_chain(clusters, per, 50, 6.0, 7);
    const std::vector<int> labels = chain_labels(clusters, per);
    const std::size_t n = x.rows;

    const double perplexity = 30.0;
    const NeighborGraph g =
        build_knn(x, std::size_t(3 * perplexity), KnnAlgorithm::Exact, 1);
    const AffinityGraph aff = perplexity_calibrate(g, perplexity, {}, 1);

    InitConfig icfg;
    const Embedding y0 = make_init(x, icfg, Method::Tsne);

    auto run = [&](double rho) {
        Schedule sched;
        sched.final_rho = rho;
        OptimOptions opt;
        const RunResult r = run_tsne(aff, y0, sched, opt);
        if (r.status != RunStatus::Completed) throw std::runtime_error("run diverged");
        return r.embedding;
    };
    const Embedding e1 = run(1.0);
    const Embedding e4 = run(4.0);
    const Embedding e30 = run(30.0);

    // Chain ordering along the principal axis of the high-exaggeration layout.
    const PcaResult axis = pca_reduce(e30.as_matrix(), 1);
    std::vector<double> idx(n), score(n);
    for (std::size_t i = 0; i < n; ++i) {
        idx[i] = double(labels[i]);
        score[i] = axis.projected.at(i, 0);
    }
    const double order_corr = std::fabs(oracle::spearman(idx, score));

    // Mean same-cluster fraction among each point's 15 nearest layout neighbors.
    const std::size_t kq = 15;
    double purity = 0.0;
    std::vector<std::pair<double, std::size_t>> cand(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t m = 0;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i)
                cand[m++] = {squared_distance2(e1.point(i), e1.point(j)), j};
        std::partial_sort(cand.begin(), cand.begin() + kq, cand.end());
        std::size_t same = 0;
        for (std::size_t t = 0; t < kq; ++t)
            if (labels[cand[t].second] == labels[i]) ++same;
        purity += double(same) / double(kq);
    }
    purity /= double(n);

    const double r1 = knn_recall(aff, e1, 15, 0, 0x42, 1);
    const double r4 = knn_recall(aff, e4, 15, 0, 0x42, 1);
    const double r30 = knn_recall(aff, e30, 15, 0, 0x42, 1);

    const bool pass =
        order_corr >= 0.95 && purity >= 0.9 && r1 > r4 && r4 > r30;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "chain order corr %.4f (floor 0.95), cluster purity %.4f (floor 0.9), "
                  "recall %.3f > %.3f > %.3f",
                  order_corr, purity, r1, r4, r30);
    return {pass, buf};
}

} // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"AC-1", ac1}, {"AC-2", ac2}, {"AC-3", ac3}, {"AC-4", ac4}, {"AC-5", ac5}};
    int failures = 0;
    for (const auto& [name, fn] : criteria) {
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("%s %s (%s)\n", name, o.pass ? "PASS" : "FAIL", o.detail.c_str());
        std::fflush(stdout);
        if (!o.pass) ++failures;
    }
    return failures;
}
