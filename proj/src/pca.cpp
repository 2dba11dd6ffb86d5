#include "nesp/pca.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <iostream>

#include "nesp/rng.hpp"

namespace nesp {

namespace {

using RowMajorMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

// Orient so the largest-magnitude loading is positive; first such entry wins ties.
void orient_column(Eigen::VectorXd& v) {
    Eigen::Index best = 0;
    double best_abs = -1.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double a = std::abs(v[i]);
        if (a > best_abs) {
            best_abs = a;
            best = i;
        }
    }
    if (v[best] < 0.0) v = -v;
}

} // namespace

PcaResult pca_reduce(const Matrix& x, std::size_t d) {
    if (x.empty()) throw UsageError("pca_reduce: empty matrix");
    if (d == 0) throw UsageError("pca_reduce: zero components requested");
    const std::size_t n = x.rows, dim = x.cols;
    RowMajorMap X(x.values.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));

    const Eigen::VectorXd mean = X.colwise().mean().transpose();
    // Covariance via the cross-product identity; avoids materializing a
    // centered copy of large inputs. Population normalization (1/n).
    Eigen::MatrixXd cov = (X.transpose() * X) / static_cast<double>(n);
    cov.noalias() -= mean * mean.transpose();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) throw DataError("pca_reduce: eigensolver failed");

    const std::size_t informative = std::min({d, n, dim});
    PcaResult out;
    out.projected = Matrix(n, d);
    out.explained_variance.assign(d, 0.0);
    out.rank_deficient = informative < d;

    // Eigen returns ascending eigenvalues; take the top `informative` from the back.
    Eigen::MatrixXd w(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(informative));
    const double top_ev = std::max(solver.eigenvalues()[static_cast<Eigen::Index>(dim - 1)], 0.0);
    for (std::size_t c = 0; c < informative; ++c) {
        const Eigen::Index src = static_cast<Eigen::Index>(dim - 1 - c);
        Eigen::VectorXd v = solver.eigenvectors().col(src);
        orient_column(v);
        w.col(static_cast<Eigen::Index>(c)) = v;
        const double ev = solver.eigenvalues()[src];
        out.explained_variance[c] = std::max(ev, 0.0);
        if (ev <= top_ev * 1e-12) out.rank_deficient = true;
    }

    const Eigen::RowVectorXd mean_scores = mean.transpose() * w;
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> P(
        out.projected.values.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    P.leftCols(static_cast<Eigen::Index>(informative)).noalias() = X * w;
    P.leftCols(static_cast<Eigen::Index>(informative)).rowwise() -= mean_scores;
    return out;
}

Method method_from_name(const std::string& name) {
    if (name == "tsne") return Method::Tsne;
    if (name == "umap-ns") return Method::UmapNs;
    if (name == "umap-bh") return Method::UmapBh;
    if (name == "fa2") return Method::Fa2;
    if (name == "le") return Method::Le;
    throw UsageError("unknown method: " + name);
}

std::string method_name(Method m) {
    switch (m) {
        case Method::Tsne: return "tsne";
        case Method::UmapNs: return "umap-ns";
        case Method::UmapBh: return "umap-bh";
        case Method::Fa2: return "fa2";
        case Method::Le: return "le";
    }
    return "?";
}

ScaleRule default_scale(Method m) {
    switch (m) {
        case Method::Tsne: return ScaleRule::make_stddev(1e-4);
        case Method::UmapNs:
        case Method::UmapBh: return ScaleRule::make_range(-10.0, 10.0);
        case Method::Fa2: return ScaleRule::make_stddev(1e4);
        case Method::Le: break;
    }
    throw UsageError("no initialization scale for this method");
}

double pooled_stddev(const Embedding& e) {
    if (e.n == 0) return 0.0;
    double mean = 0.0;
    for (double v : e.coords) mean += v;
    mean /= static_cast<double>(e.coords.size());
    double ss = 0.0;
    for (double v : e.coords) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(e.coords.size()));
}

namespace {

void apply_scale(Embedding& e, const ScaleRule& rule) {
    if (rule.kind == ScaleRule::Kind::Stddev) {
        const double sd = pooled_stddev(e);
        if (sd <= 0.0) throw DataError("make_init: degenerate layout, cannot rescale to a stddev");
        const double f = rule.stddev / sd;
        for (double& v : e.coords) v *= f;
        return;
    }
    double lo = e.coords[0], hi = e.coords[0];
    for (double v : e.coords) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi <= lo) throw DataError("make_init: degenerate layout, cannot rescale to a range");
    const double f = (rule.hi - rule.lo) / (hi - lo);
    for (double& v : e.coords) v = rule.lo + (v - lo) * f;
}

} // namespace

Embedding make_init(const Matrix& x, const InitConfig& cfg, Method method) {
    if (method == Method::Le) throw UsageError("make_init: spectral layout needs no initialization");
    const ScaleRule rule = cfg.scale ? *cfg.scale : default_scale(method);

    Embedding e;
    switch (cfg.mode) {
        case InitMode::Pca: {
            PcaResult pca = pca_reduce(x, 2);
            if (pca.rank_deficient)
                std::cerr << "[nesp] warning: pca init on rank-deficient data\n";
            e = Embedding::from_matrix(pca.projected);
            break;
        }
        case InitMode::Random: {
            Rng rng = Rng::stream(cfg.seed, 0x1a17);
            e = Embedding(x.rows);
            for (double& v : e.coords) v = rng.normal();
            break;
        }
        case InitMode::Provided: {
            if (!cfg.provided) throw UsageError("make_init: provided mode without a layout");
            if (cfg.provided->n != x.rows)
                throw DataError("make_init: provided layout has " +
                                std::to_string(cfg.provided->n) + " rows, data has " +
                                std::to_string(x.rows));
            e = *cfg.provided;
            break;
        }
    }
    apply_scale(e, rule);
    return e;
}

} // namespace nesp
