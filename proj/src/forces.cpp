#include "nesp/forces.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "nesp/parallel.hpp"
#include "nesp/rng.hpp"

namespace nesp {

void pair_jitter_direction(std::uint32_t i, std::uint32_t j, double* dir) {
    const std::uint64_t key = (static_cast<std::uint64_t>(std::min(i, j)) << 32) | std::max(i, j);
    const double angle = 2.0 * std::numbers::pi *
                         (static_cast<double>(splitmix64(key) >> 11) * 0x1.0p-53);
    dir[0] = std::cos(angle);
    dir[1] = std::sin(angle);
}

ForceField attraction(const AffinityGraph& a, const Embedding& y,
                      AttractionKernel kernel, double weight_scale, int threads) {
    if (a.n != y.n) throw UsageError("attraction: affinity/embedding size mismatch");
    if (a.adj_offset.size() != a.n + 1)
        throw UsageError("attraction: adjacency arrays not built");
    ForceField f(y.n);
    parallel_for(0, y.n, threads, [&](std::size_t i) {
        const double* yi = y.point(i);
        double fx = 0.0, fy = 0.0;
        for (std::size_t t = a.adj_offset[i]; t < a.adj_offset[i + 1]; ++t) {
            const std::uint32_t j = a.adj_index[t];
            const double* yj = y.point(j);
            const double dx = yi[0] - yj[0];
            const double dy = yi[1] - yj[1];
            double coeff = weight_scale * a.adj_value[t];
            if (kernel == AttractionKernel::Cauchy)
                coeff /= 1.0 + dx * dx + dy * dy;
            fx += coeff * dx;
            fy += coeff * dy;
        }
        f.point(i)[0] = fx;
        f.point(i)[1] = fy;
    });
    return f;
}

ForceField tsne_repulsion_exact(const Embedding& y, int threads) {
    const std::size_t n = y.n;
    ForceField f(n);
    std::vector<double> z_per_point(n, 0.0);
    parallel_for(0, n, threads, [&](std::size_t i) {
        const double* yi = y.point(i);
        double fx = 0.0, fy = 0.0, z = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const double* yj = y.point(j);
            const double dx = yi[0] - yj[0];
            const double dy = yi[1] - yj[1];
            const double w = 1.0 / (1.0 + dx * dx + dy * dy);
            z += w;
            fx += w * w * dx;
            fy += w * w * dy;
        }
        f.point(i)[0] = fx;
        f.point(i)[1] = fy;
        z_per_point[i] = z;
    });
    double z_total = 0.0;
    for (double z : z_per_point) z_total += z; // index order: thread-count independent
    f.z_sum = z_total;
    if (z_total > 0.0) {
        const double scale = static_cast<double>(n) / z_total;
        for (double& v : f.values) v *= scale;
    }
    return f;
}

ForceField umap_repulsion_exact(const Embedding& y, double gamma, double epsilon, int threads) {
    const std::size_t n = y.n;
    ForceField f(n);
    std::vector<double> z_per_point(n, 0.0);
    parallel_for(0, n, threads, [&](std::size_t i) {
        const double* yi = y.point(i);
        double fx = 0.0, fy = 0.0, z = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const double* yj = y.point(j);
            const double dx = yi[0] - yj[0];
            const double dy = yi[1] - yj[1];
            const double d2 = dx * dx + dy * dy;
            const double w = 1.0 / (1.0 + d2);
            const double coeff = gamma * w / (d2 + epsilon);
            z += w;
            fx += coeff * dx;
            fy += coeff * dy;
        }
        f.point(i)[0] = fx;
        f.point(i)[1] = fy;
        z_per_point[i] = z;
    });
    for (double z : z_per_point) f.z_sum += z;
    return f;
}

ForceField fa2_forces(const NeighborGraph& g, const std::vector<std::uint32_t>& degree,
                      const Embedding& y, bool edge_repulsion, int threads) {
    if (g.directed) throw UsageError("fa2_forces: expects the symmetrized graph");
    if (g.n != y.n || degree.size() != y.n)
        throw UsageError("fa2_forces: size mismatch");
    const std::size_t n = y.n;
    ForceField f(n);
    parallel_for(0, n, threads, [&](std::size_t i) {
        const double* yi = y.point(i);
        double fx = 0.0, fy = 0.0;
        for (std::uint32_t j : g.neighbors[i]) {
            const double* yj = y.point(j);
            fx += yi[0] - yj[0];
            fy += yi[1] - yj[1];
        }
        const double hi1 = static_cast<double>(degree[i]) + 1.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const double* yj = y.point(j);
            double dx = yi[0] - yj[0];
            double dy = yi[1] - yj[1];
            double d2 = dx * dx + dy * dy;
            if (d2 == 0.0) {
                double dir[2];
                pair_jitter_direction(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), dir);
                const double sign = i < j ? 1.0 : -1.0;
                dx = sign * 1e-9 * dir[0];
                dy = sign * 1e-9 * dir[1];
                d2 = 1e-18;
            }
            const double c = edge_repulsion ? hi1 * (static_cast<double>(degree[j]) + 1.0) : 1.0;
            const double coeff = c / d2;
            fx -= coeff * dx;
            fy -= coeff * dy;
        }
        f.point(i)[0] = fx;
        f.point(i)[1] = fy;
    });
    return f;
}

ForceField assemble_gradient(const ForceSpec& spec, const AffinityGraph* a,
                             const NeighborGraph* g, const std::vector<std::uint32_t>* degree,
                             const Embedding& y, int threads) {
    switch (spec.method) {
        case ForceMethod::Tsne: {
            if (!a) throw UsageError("assemble_gradient: tsne needs affinities");
            if (spec.rho <= 0.0) throw UsageError("assemble_gradient: rho must be positive");
            ForceField f = attraction(*a, y, AttractionKernel::Cauchy,
                                      a->gradient_weight_scale(), threads);
            const ForceField rep = tsne_repulsion_exact(y, threads);
            const double inv_rho = 1.0 / spec.rho;
            for (std::size_t t = 0; t < f.values.size(); ++t)
                f.values[t] -= inv_rho * rep.values[t];
            f.z_sum = rep.z_sum;
            return f;
        }
        case ForceMethod::Umap: {
            if (!a) throw UsageError("assemble_gradient: umap needs affinities");
            ForceField f = attraction(*a, y, AttractionKernel::Cauchy, 1.0, threads);
            const ForceField rep = umap_repulsion_exact(y, spec.gamma, spec.epsilon, threads);
            for (std::size_t t = 0; t < f.values.size(); ++t) f.values[t] -= rep.values[t];
            f.z_sum = rep.z_sum;
            return f;
        }
        case ForceMethod::Fa2: {
            if (!g || !degree) throw UsageError("assemble_gradient: fa2 needs the graph and degrees");
            return fa2_forces(*g, *degree, y, spec.edge_repulsion, threads);
        }
    }
    throw UsageError("assemble_gradient: bad method");
}

} // namespace nesp
