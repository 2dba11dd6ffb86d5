#include "nesp/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nesp/common.hpp"
#include "nesp/knn.hpp"
#include "nesp/parallel.hpp"
#include "nesp/quadtree.hpp"
#include "nesp/rng.hpp"

namespace nesp {
namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

double sign_of(double x) { return x == 0.0 ? 0.0 : (x < 0.0 ? -1.0 : 1.0); }

struct SpanInfo {
    double x = 0.0, y = 0.0;
    bool finite = true;
};

SpanInfo measure_span(const Embedding& e) {
    SpanInfo s;
    if (e.n == 0) return s;
    double lo_x = e.x(0), hi_x = e.x(0), lo_y = e.y(0), hi_y = e.y(0);
    for (std::size_t i = 0; i < e.n; ++i) {
        const double px = e.x(i), py = e.y(i);
        if (!std::isfinite(px) || !std::isfinite(py)) s.finite = false;
        lo_x = std::min(lo_x, px);
        hi_x = std::max(hi_x, px);
        lo_y = std::min(lo_y, py);
        hi_y = std::max(hi_y, py);
    }
    s.x = hi_x - lo_x;
    s.y = hi_y - lo_y;
    return s;
}

double mean_force_norm(const ForceField& f) {
    if (f.n == 0) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < f.n; ++i)
        acc += std::hypot(f.point(i)[0], f.point(i)[1]);
    return acc / static_cast<double>(f.n);
}

// Momentum descent with per-coordinate gains: a gain grows additively while
// the incoming gradient opposes the accumulated velocity and decays
// geometrically once they align, floored at 0.01.
struct Integrator {
    std::vector<double> velocity, gains;

    explicit Integrator(std::size_t m) : velocity(m, 0.0), gains(m, 1.0) {}

    void advance(Embedding& e, const ForceField& field, double step, double momentum) {
        for (std::size_t c = 0; c < velocity.size(); ++c) {
            const double g = field.values[c];
            gains[c] = sign_of(g) != sign_of(velocity[c]) ? gains[c] + 0.2 : gains[c] * 0.8;
            if (gains[c] < 0.01) gains[c] = 0.01;
            velocity[c] = momentum * velocity[c] - step * gains[c] * g;
            e.coords[c] += velocity[c];
        }
    }
};

TraceRecord make_record(std::size_t iter, double z, double rho, const SpanInfo& span,
                        double grad_norm, std::size_t n) {
    TraceRecord r;
    r.iter = iter;
    r.z = z;
    r.n_over_rho_z = (std::isfinite(z) && z > 0.0 && rho > 0.0)
                         ? static_cast<double>(n) / (rho * z)
                         : kNan;
    r.span_x = span.x;
    r.span_y = span.y;
    r.grad_norm = grad_norm;
    return r;
}

// The batch loop shared by the exaggeration-family methods. eval(y, rho_t)
// returns the descent field for the current layout; its z_sum lands in the
// trace when has_z.
template <typename FieldFn>
RunResult drive_batch(const Embedding& y0, const Schedule& sched, const OptimOptions& opt,
                      bool has_z, FieldFn&& eval) {
    RunResult out;
    out.embedding = y0;
    out.trace.cadence = opt.trace_cadence == 0 ? 10 : opt.trace_cadence;

    {
        const SpanInfo s0 = measure_span(y0);
        if (!s0.finite) throw DataError("optimizer: initial layout has non-finite coordinates");
    }

    Integrator integ(2 * y0.n);
    for (std::size_t it = 0; it < sched.total_iters; ++it) {
        const double rho_t = sched.rho_at(it);
        ForceField field = eval(out.embedding, rho_t);
        if (it % out.trace.cadence == 0) {
            const SpanInfo span = measure_span(out.embedding);
            out.trace.records.push_back(make_record(it, has_z ? field.z_sum : kNan, rho_t, span,
                                                    mean_force_norm(field), y0.n));
        }
        integ.advance(out.embedding, field, sched.step_factor(it), sched.momentum_at(it));
        out.iterations_run = it + 1;

        const SpanInfo span = measure_span(out.embedding);
        if (!span.finite || std::max(span.x, span.y) > opt.span_limit) {
            out.status = RunStatus::Diverged;
            out.trace.records.push_back(
                make_record(it + 1, kNan, rho_t, span, kNan, y0.n));
            return out;
        }
    }

    const double rho_end = sched.total_iters > 0 ? sched.rho_at(sched.total_iters - 1)
                                                 : sched.final_rho;
    ForceField field = eval(out.embedding, rho_end);
    out.trace.records.push_back(make_record(sched.total_iters, has_z ? field.z_sum : kNan,
                                            rho_end, measure_span(out.embedding),
                                            mean_force_norm(field), y0.n));
    return out;
}

ForceField umap_field(const AffinityGraph& a, const Embedding& y, double gamma, double epsilon,
                      double rho_t, double theta, int threads) {
    const QuadTree tree(y);
    QuadTree::Kernel kernel;
    kernel.type = QuadTree::Kernel::Type::UmapEps;
    kernel.gamma = gamma;
    kernel.epsilon = epsilon;
    ForceField rep = tree.repulsion(y, kernel, theta, nullptr, threads);
    ForceField field = attraction(a, y, AttractionKernel::Cauchy, 1.0, threads);
    const double inv_rho = 1.0 / rho_t;
    for (std::size_t c = 0; c < field.values.size(); ++c) field.values[c] -= inv_rho * rep.values[c];
    field.z_sum = rep.z_sum;
    return field;
}

} // namespace

RunResult run_tsne(const AffinityGraph& a, const Embedding& y0, const Schedule& sched,
                   const OptimOptions& opt) {
    if (a.n != y0.n) throw UsageError("run_tsne: affinity/layout size mismatch");
    if (sched.final_rho <= 0.0) throw UsageError("run_tsne: exaggeration must be positive");
    const int threads = resolve_threads(opt.threads);
    const double weight_scale = a.gradient_weight_scale();
    return drive_batch(y0, sched, opt, true, [&](const Embedding& y, double rho_t) {
        const QuadTree tree(y);
        QuadTree::Kernel kernel; // TsneW2
        ForceField rep = tree.repulsion(y, kernel, opt.theta, nullptr, threads);
        ForceField field = attraction(a, y, AttractionKernel::Cauchy, weight_scale, threads);
        const double inv_rho = 1.0 / rho_t;
        for (std::size_t c = 0; c < field.values.size(); ++c)
            field.values[c] -= inv_rho * rep.values[c];
        field.z_sum = rep.z_sum;
        return field;
    });
}

RunResult run_umap_full(const AffinityGraph& a, const Embedding& y0, double gamma,
                        double epsilon, const Schedule& sched, const OptimOptions& opt) {
    if (a.n != y0.n) throw UsageError("run_umap_full: affinity/layout size mismatch");
    if (gamma < 0.0) throw UsageError("run_umap_full: negative repulsion weight");
    const int threads = resolve_threads(opt.threads);
    return drive_batch(y0, sched, opt, true, [&](const Embedding& y, double rho_t) {
        return umap_field(a, y, gamma, epsilon, rho_t, opt.theta, threads);
    });
}

RunResult run_umap_ns(const AffinityGraph& a, const Embedding& y0, const NegSampleConfig& cfg,
                      std::uint64_t seed, const OptimOptions& opt) {
    if (a.n != y0.n) throw UsageError("run_umap_ns: affinity/layout size mismatch");
    if (cfg.nu < 0) throw UsageError("run_umap_ns: negative sample count");
    if (cfg.epochs == 0) throw UsageError("run_umap_ns: zero epochs");
    const std::size_t n = a.n;
    const int threads = resolve_threads(opt.threads);

    // Positive edges, both orientations, fixed enumeration order.
    struct DirEdge {
        std::uint32_t head, tail;
        double v;
    };
    std::vector<DirEdge> edges;
    edges.reserve(2 * a.edges.size());
    for (const AffinityEdge& e : a.edges) {
        edges.push_back({e.i, e.j, e.v});
        edges.push_back({e.j, e.i, e.v});
    }
    if (edges.empty()) throw UsageError("run_umap_ns: affinity graph has no edges");

    RunResult out;
    out.embedding = y0;
    out.trace.cadence = opt.trace_cadence == 0 ? 10 : opt.trace_cadence;
    {
        const SpanInfo s0 = measure_span(y0);
        if (!s0.finite) throw DataError("run_umap_ns: initial layout has non-finite coordinates");
    }

    auto record_state = [&](std::size_t epoch) {
        ForceField field = umap_field(a, out.embedding, cfg.gamma, cfg.epsilon, 1.0, opt.theta,
                                      threads);
        out.trace.records.push_back(make_record(epoch, field.z_sum, 1.0,
                                                measure_span(out.embedding),
                                                mean_force_norm(field), n));
    };

    Rng rng = Rng::stream(seed, 0x6e6761746976ULL);
    std::vector<std::uint32_t> order(edges.size());
    for (std::size_t t = 0; t < order.size(); ++t) order[t] = static_cast<std::uint32_t>(t);

    Embedding& e = out.embedding;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        if (epoch % out.trace.cadence == 0) record_state(epoch);
        const double step =
            cfg.lr0 * (1.0 - static_cast<double>(epoch) / static_cast<double>(cfg.epochs));
        rng.shuffle(order);
        for (const std::uint32_t idx : order) {
            const DirEdge& ed = edges[idx];
            double* yi = e.point(ed.head);
            double* yj = e.point(ed.tail);
            {
                const double dx = yi[0] - yj[0];
                const double dy = yi[1] - yj[1];
                const double w = 1.0 / (1.0 + dx * dx + dy * dy);
                const double coeff = ed.v * w;
                const double ux = std::clamp(coeff * dx, -cfg.clip, cfg.clip);
                const double uy = std::clamp(coeff * dy, -cfg.clip, cfg.clip);
                yi[0] -= step * ux;
                yi[1] -= step * uy;
                if (cfg.move_tail_on_attraction) {
                    yj[0] += step * ux;
                    yj[1] += step * uy;
                }
            }
            for (int t = 0; t < cfg.nu; ++t) {
                // Uniform over all nodes, i itself included: a self draw has
                // (y_i - y_l) = 0 and contributes nothing.
                const std::size_t l = rng.uniform_index(n);
                const double* yl = e.point(l);
                const double dx = yi[0] - yl[0];
                const double dy = yi[1] - yl[1];
                const double d2 = dx * dx + dy * dy;
                const double coeff = cfg.gamma / ((1.0 + d2) * (d2 + cfg.epsilon));
                yi[0] += step * std::clamp(coeff * dx, -cfg.clip, cfg.clip);
                yi[1] += step * std::clamp(coeff * dy, -cfg.clip, cfg.clip);
            }
        }
        out.iterations_run = epoch + 1;
        const SpanInfo span = measure_span(e);
        if (!span.finite || std::max(span.x, span.y) > opt.span_limit) {
            out.status = RunStatus::Diverged;
            out.trace.records.push_back(make_record(epoch + 1, kNan, 1.0, span, kNan, n));
            return out;
        }
    }
    record_state(cfg.epochs);
    return out;
}

RunResult run_fa2(const NeighborGraph& g, const Embedding& y0, const Fa2Options& cfg,
                  const OptimOptions& opt) {
    if (g.directed) throw UsageError("run_fa2: undirected graph required");
    if (g.n != y0.n) throw UsageError("run_fa2: graph/layout size mismatch");
    const int threads = resolve_threads(opt.threads);
    const std::vector<std::uint32_t> degree = degrees(g);

    double degree_sum = 0.0;
    for (const std::uint32_t d : degree) degree_sum += d;
    if (degree_sum == 0.0) throw UsageError("run_fa2: graph has no edges");
    const double step = static_cast<double>(g.n) / degree_sum; // 1 / mean degree

    std::vector<double> mass;
    if (cfg.edge_repulsion) {
        mass.resize(g.n);
        for (std::size_t i = 0; i < g.n; ++i) mass[i] = degree[i] + 1.0;
    }

    Schedule sched;
    sched.total_iters = cfg.iters;
    sched.final_rho = 1.0;
    sched.early_iters = 0;

    RunResult out;
    out.embedding = y0;
    out.trace.cadence = opt.trace_cadence == 0 ? 10 : opt.trace_cadence;
    {
        const SpanInfo s0 = measure_span(y0);
        if (!s0.finite) throw DataError("run_fa2: initial layout has non-finite coordinates");
    }

    auto eval = [&](const Embedding& y) {
        const QuadTree tree(y, mass);
        QuadTree::Kernel kernel;
        kernel.type = QuadTree::Kernel::Type::InverseSquare;
        ForceField rep = tree.repulsion(y, kernel, opt.theta,
                                        cfg.edge_repulsion ? &mass : nullptr, threads);
        ForceField field(y.n);
        parallel_for(0, y.n, threads, [&](std::size_t i) {
            const double* yi = y.point(i);
            double fx = 0.0, fy = 0.0;
            for (const std::uint32_t j : g.neighbors[i]) {
                fx += yi[0] - y.point(j)[0];
                fy += yi[1] - y.point(j)[1];
            }
            field.point(i)[0] = fx - rep.point(i)[0];
            field.point(i)[1] = fy - rep.point(i)[1];
        });
        return field;
    };

    // Per-iteration force cap: the 99th percentile of point force norms.
    std::vector<double> norms(g.n), scratch(g.n);
    Integrator integ(2 * g.n);
    for (std::size_t it = 0; it < cfg.iters; ++it) {
        ForceField field = eval(out.embedding);
        const double raw_norm = mean_force_norm(field);
        if (it % out.trace.cadence == 0) {
            out.trace.records.push_back(
                make_record(it, kNan, 1.0, measure_span(out.embedding), raw_norm, g.n));
        }
        if (cfg.force_tolerance > 0.0 && raw_norm < cfg.force_tolerance) {
            out.iterations_run = it;
            break;
        }

        for (std::size_t i = 0; i < g.n; ++i)
            norms[i] = std::hypot(field.point(i)[0], field.point(i)[1]);
        scratch = norms;
        const std::size_t rank = static_cast<std::size_t>(
            std::ceil(0.99 * static_cast<double>(g.n)));
        const std::size_t pos = (rank == 0 ? 1 : std::min(rank, g.n)) - 1;
        std::nth_element(scratch.begin(), scratch.begin() + pos, scratch.end());
        const double cap = scratch[pos];
        if (cap > 0.0) {
            for (std::size_t i = 0; i < g.n; ++i) {
                if (norms[i] > cap) {
                    const double s = cap / norms[i];
                    field.point(i)[0] *= s;
                    field.point(i)[1] *= s;
                }
            }
        }

        integ.advance(out.embedding, field, step, sched.momentum_at(it));
        out.iterations_run = it + 1;

        const SpanInfo span = measure_span(out.embedding);
        if (!span.finite || std::max(span.x, span.y) > opt.span_limit) {
            out.status = RunStatus::Diverged;
            out.trace.records.push_back(make_record(it + 1, kNan, 1.0, span, kNan, g.n));
            return out;
        }
    }

    ForceField field = eval(out.embedding);
    out.trace.records.push_back(make_record(out.iterations_run, kNan, 1.0,
                                            measure_span(out.embedding), mean_force_norm(field),
                                            g.n));
    return out;
}

} // namespace nesp
