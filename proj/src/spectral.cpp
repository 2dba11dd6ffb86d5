#include "nesp/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include <Eigen/Dense>

#include "nesp/common.hpp"
#include "nesp/parallel.hpp"
#include "nesp/rng.hpp"

namespace nesp {
namespace {

std::vector<double> inv_sqrt_degree(const GraphOperators& ops) {
    std::vector<double> s(ops.n, 0.0);
    for (std::size_t i = 0; i < ops.n; ++i)
        s[i] = ops.degree[i] > 0.0 ? 1.0 / std::sqrt(ops.degree[i]) : 0.0;
    return s;
}

std::size_t component_count(const GraphOperators& ops) {
    std::vector<std::uint8_t> seen(ops.n, 0);
    std::vector<std::uint32_t> stack;
    std::size_t count = 0;
    for (std::size_t s = 0; s < ops.n; ++s) {
        if (seen[s]) continue;
        ++count;
        seen[s] = 1;
        stack.assign(1, static_cast<std::uint32_t>(s));
        while (!stack.empty()) {
            const std::uint32_t u = stack.back();
            stack.pop_back();
            for (std::size_t t = ops.offset[u]; t < ops.offset[u + 1]; ++t) {
                const std::uint32_t v = ops.index[t];
                if (!seen[v]) {
                    seen[v] = 1;
                    stack.push_back(v);
                }
            }
        }
    }
    return count;
}

// Flip so the entry of largest magnitude is positive; first index wins ties.
void canonical_sign(double* x, std::size_t n) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (std::abs(x[i]) > std::abs(x[best])) best = i;
    if (x[best] < 0.0)
        for (std::size_t i = 0; i < n; ++i) x[i] = -x[i];
}

double norm2(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * x[i];
    return std::sqrt(acc);
}

// Bottom eigenpairs of the normalized laplacian by direct dense solve.
void dense_bottom(const GraphOperators& ops, std::size_t want, std::vector<double>& evals,
                  std::vector<std::vector<double>>& evecs) {
    const std::size_t n = ops.n;
    const std::vector<double> s = inv_sqrt_degree(ops);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        m(i, i) = ops.degree[i] > 0.0 ? 1.0 : 0.0;
        for (std::size_t t = ops.offset[i]; t < ops.offset[i + 1]; ++t)
            m(i, ops.index[t]) -= ops.value[t] * s[i] * s[ops.index[t]];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
    if (solver.info() != Eigen::Success)
        throw DataError("laplacian eigensolve failed to converge");
    evals.resize(want);
    evecs.assign(want, std::vector<double>(n));
    for (std::size_t c = 0; c < want; ++c) {
        evals[c] = solver.eigenvalues()(c);
        for (std::size_t i = 0; i < n; ++i) evecs[c][i] = solver.eigenvectors()(i, c);
    }
}

// Subspace iteration on 2I - L_norm (spectrum in [0, 2], largest first), which
// orders the Ritz pairs by ascending laplacian eigenvalue.
void iterative_bottom(const GraphOperators& ops, std::size_t want, const SpectralOptions& opt,
                      std::vector<double>& evals, std::vector<std::vector<double>>& evecs) {
    const std::size_t n = ops.n;
    const std::size_t k = std::min(n, want + 2);
    std::vector<std::vector<double>> q(k, std::vector<double>(n));
    Rng rng = Rng::stream(opt.seed, 0x5bace0000ULL);
    // Seed the known constant-direction vector first, random fill after.
    for (std::size_t i = 0; i < n; ++i)
        q[0][i] = ops.degree[i] > 0.0 ? std::sqrt(ops.degree[i]) : 1.0;
    for (std::size_t c = 1; c < k; ++c)
        for (std::size_t i = 0; i < n; ++i) q[c][i] = rng.normal();

    auto orthonormalize = [&]() {
        for (std::size_t c = 0; c < k; ++c) {
            for (std::size_t p = 0; p < c; ++p) {
                double dot = 0.0;
                for (std::size_t i = 0; i < n; ++i) dot += q[c][i] * q[p][i];
                for (std::size_t i = 0; i < n; ++i) q[c][i] -= dot * q[p][i];
            }
            double nrm = norm2(q[c].data(), n);
            if (nrm == 0.0) {
                // Degenerate direction; replace and retry from fresh noise.
                for (std::size_t i = 0; i < n; ++i) q[c][i] = rng.normal();
                nrm = norm2(q[c].data(), n);
            }
            for (std::size_t i = 0; i < n; ++i) q[c][i] /= nrm;
        }
    };

    orthonormalize();
    std::vector<std::vector<double>> next(k, std::vector<double>(n));
    std::vector<double> ritz(k, 0.0), prev(k, 1e300);
    Eigen::MatrixXd h(k, k);
    std::size_t it = 0;
    for (; it < opt.max_iterations; ++it) {
        for (std::size_t c = 0; c < k; ++c) {
            ops.apply_L_norm(q[c].data(), next[c].data(), opt.threads);
            for (std::size_t i = 0; i < n; ++i) next[c][i] = 2.0 * q[c][i] - next[c][i];
        }
        std::swap(q, next);
        orthonormalize();

        if (it % 10 != 9 && it + 1 != opt.max_iterations) continue;
        // Rayleigh-Ritz on the current basis.
        for (std::size_t c = 0; c < k; ++c) {
            ops.apply_L_norm(q[c].data(), next[c].data(), opt.threads);
            for (std::size_t p = 0; p <= c; ++p) {
                double dot = 0.0;
                for (std::size_t i = 0; i < n; ++i) dot += q[p][i] * next[c][i];
                h(p, c) = dot;
                h(c, p) = dot;
            }
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> small(h);
        for (std::size_t c = 0; c < k; ++c) ritz[c] = small.eigenvalues()(c);
        double drift = 0.0;
        for (std::size_t c = 0; c < want; ++c)
            drift = std::max(drift, std::abs(ritz[c] - prev[c]));
        prev = ritz;
        if (drift <= opt.tolerance) {
            // Rotate the basis into the Ritz vectors and finish.
            std::vector<std::vector<double>> rot(k, std::vector<double>(n, 0.0));
            for (std::size_t c = 0; c < k; ++c)
                for (std::size_t p = 0; p < k; ++p) {
                    const double w = small.eigenvectors()(p, c);
                    for (std::size_t i = 0; i < n; ++i) rot[c][i] += w * q[p][i];
                }
            q = std::move(rot);
            break;
        }
    }
    if (it >= opt.max_iterations)
        std::fprintf(stderr,
                     "warning: eigenmap iteration hit the %zu-iteration cap "
                     "(residual tolerance %.1e not reached)\n",
                     opt.max_iterations, opt.tolerance);

    evals.assign(ritz.begin(), ritz.begin() + static_cast<std::ptrdiff_t>(want));
    evecs.assign(want, std::vector<double>(n));
    for (std::size_t c = 0; c < want; ++c) evecs[c] = q[c];
}

} // namespace

void GraphOperators::apply_V(const double* x, double* out, int threads) const {
    parallel_for(0, n, threads, [&](std::size_t i) {
        double acc = 0.0;
        for (std::size_t t = offset[i]; t < offset[i + 1]; ++t) acc += value[t] * x[index[t]];
        out[i] = acc;
    });
}

void GraphOperators::apply_L(const double* x, double* out, int threads) const {
    parallel_for(0, n, threads, [&](std::size_t i) {
        double acc = degree[i] * x[i];
        for (std::size_t t = offset[i]; t < offset[i + 1]; ++t) acc -= value[t] * x[index[t]];
        out[i] = acc;
    });
}

void GraphOperators::apply_L_norm(const double* x, double* out, int threads) const {
    parallel_for(0, n, threads, [&](std::size_t i) {
        if (degree[i] <= 0.0) {
            out[i] = 0.0;
            return;
        }
        const double si = 1.0 / std::sqrt(degree[i]);
        double acc = 0.0;
        for (std::size_t t = offset[i]; t < offset[i + 1]; ++t) {
            const std::uint32_t j = index[t];
            if (degree[j] > 0.0) acc += value[t] * x[j] / std::sqrt(degree[j]);
        }
        out[i] = x[i] - si * acc;
    });
}

void GraphOperators::apply_M(const double* x, double* out, int threads) const {
    parallel_for(0, n, threads, [&](std::size_t i) {
        double acc = (1.0 - eta * degree[i]) * x[i];
        for (std::size_t t = offset[i]; t < offset[i + 1]; ++t)
            acc += eta * value[t] * x[index[t]];
        out[i] = acc;
    });
}

GraphOperators build_operators(const AffinityGraph& a, double eta) {
    GraphOperators ops;
    ops.n = a.n;
    ops.offset.assign(a.n + 1, 0);
    for (const AffinityEdge& e : a.edges) {
        ++ops.offset[e.i + 1];
        ++ops.offset[e.j + 1];
    }
    for (std::size_t i = 0; i < a.n; ++i) ops.offset[i + 1] += ops.offset[i];
    ops.index.resize(ops.offset[a.n]);
    ops.value.resize(ops.offset[a.n]);
    std::vector<std::size_t> cursor(ops.offset.begin(), ops.offset.end() - 1);
    for (const AffinityEdge& e : a.edges) {
        ops.index[cursor[e.i]] = e.j;
        ops.value[cursor[e.i]++] = e.v;
        ops.index[cursor[e.j]] = e.i;
        ops.value[cursor[e.j]++] = e.v;
    }
    ops.degree.assign(a.n, 0.0);
    for (std::size_t i = 0; i < a.n; ++i)
        for (std::size_t t = ops.offset[i]; t < ops.offset[i + 1]; ++t)
            ops.degree[i] += ops.value[t];

    double max_degree = 0.0;
    for (const double d : ops.degree) max_degree = std::max(max_degree, d);
    if (eta <= 0.0) {
        ops.eta = max_degree > 0.0 ? 0.9 / max_degree : 1.0;
    } else {
        if (max_degree > 0.0 && eta > 1.0 / max_degree)
            throw UsageError("build_operators: eta " + std::to_string(eta) +
                             " exceeds the admissible maximum " +
                             std::to_string(1.0 / max_degree) +
                             " (iteration matrix would go negative)");
        ops.eta = eta;
    }
    return ops;
}

SpectralResult laplacian_eigenmaps(const AffinityGraph& a, std::size_t n_components,
                                   const SpectralOptions& opt) {
    if (n_components < 1) throw UsageError("laplacian_eigenmaps: need at least one component");
    if (a.n < n_components + 1)
        throw UsageError("laplacian_eigenmaps: graph smaller than component count + 1");
    const GraphOperators ops = build_operators(a);
    const std::size_t want = n_components + 1; // trivial vector plus the requested count

    std::vector<double> evals;
    std::vector<std::vector<double>> evecs;
    if (a.n <= opt.dense_threshold)
        dense_bottom(ops, want, evals, evecs);
    else
        iterative_bottom(ops, want, opt, evals, evecs);

    SpectralResult out;
    out.zero_multiplicity = component_count(ops);
    out.disconnected = out.zero_multiplicity > 1;
    if (out.disconnected)
        std::fprintf(stderr,
                     "warning: affinity graph has %zu connected components; eigenmap "
                     "coordinates include kernel directions that collapse each extra "
                     "component to a point\n",
                     out.zero_multiplicity);

    // Keep eigenvectors 1..n_components, map b -> D^{-1/2} b, unit-normalize.
    const std::vector<double> s = inv_sqrt_degree(ops);
    out.vectors = Matrix(a.n, n_components);
    out.eigenvalues.assign(evals.begin() + 1, evals.end());
    std::vector<double> col(a.n);
    for (std::size_t c = 0; c < n_components; ++c) {
        for (std::size_t i = 0; i < a.n; ++i) col[i] = s[i] * evecs[c + 1][i];
        const double nrm = norm2(col.data(), a.n);
        if (nrm == 0.0) throw DataError("laplacian_eigenmaps: degenerate eigenvector");
        for (double& v : col) v /= nrm;
        canonical_sign(col.data(), a.n);
        for (std::size_t i = 0; i < a.n; ++i) out.vectors.at(i, c) = col[i];
    }
    if (n_components >= 2) {
        out.embedding = Embedding(a.n);
        for (std::size_t i = 0; i < a.n; ++i) {
            out.embedding.x(i) = out.vectors.at(i, 0);
            out.embedding.y(i) = out.vectors.at(i, 1);
        }
    }
    return out;
}

LimitIterationResult tsne_limit_iteration(const GraphOperators& ops, const Embedding& y0,
                                          std::size_t iters, bool orthogonalize, int threads) {
    if (ops.n != y0.n) throw UsageError("tsne_limit_iteration: size mismatch");
    if (ops.n < 3) throw UsageError("tsne_limit_iteration: need at least 3 points");
    const std::size_t n = ops.n;

    std::vector<std::vector<double>> col(2, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        col[0][i] = y0.x(i);
        col[1][i] = y0.y(i);
    }
    std::vector<double> tmp(n);
    std::vector<bool> dead(2, false);

    auto center = [&](std::vector<double>& x) {
        double mean = 0.0;
        for (const double v : x) mean += v;
        mean /= static_cast<double>(n);
        for (double& v : x) v -= mean;
    };

    LimitIterationResult out;
    for (std::size_t it = 0; it < iters; ++it) {
        for (std::size_t c = 0; c < 2; ++c) {
            if (dead[c]) continue;
            ops.apply_M(col[c].data(), tmp.data(), threads);
            col[c].swap(tmp);
            center(col[c]);
            if (orthogonalize && c == 1 && !dead[0]) {
                double dot = 0.0;
                for (std::size_t i = 0; i < n; ++i) dot += col[1][i] * col[0][i];
                for (std::size_t i = 0; i < n; ++i) col[1][i] -= dot * col[0][i];
            }
            const double nrm = norm2(col[c].data(), n);
            if (nrm == 0.0) {
                // Collapsed onto the trivial direction; zero and leave it.
                dead[c] = true;
                out.degenerate = true;
                std::fill(col[c].begin(), col[c].end(), 0.0);
                continue;
            }
            for (double& v : col[c]) v /= nrm;
        }
        out.iterations = it + 1;
    }

    out.embedding = Embedding(n);
    for (std::size_t c = 0; c < 2; ++c) {
        if (!dead[c]) canonical_sign(col[c].data(), n);
        ops.apply_L(col[c].data(), tmp.data(), threads);
        double num = 0.0;
        for (std::size_t i = 0; i < n; ++i) num += col[c][i] * tmp[i];
        out.rayleigh[c] = num; // columns are unit length (or zero when degenerate)
        for (std::size_t i = 0; i < n; ++i) out.embedding.point(i)[c] = col[c][i];
    }
    return out;
}

} // namespace nesp
