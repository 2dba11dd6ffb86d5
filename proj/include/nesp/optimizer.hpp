#pragma once

#include <cstdint>
#include <vector>

#include "nesp/affinity.hpp"
#include "nesp/forces.hpp"
#include "nesp/matrix.hpp"

namespace nesp {

// Iteration schedule shared by the batch methods. The exaggeration factor
// divides the repulsive term; the early phase applies max(early_rho,
// final_rho) for its first `early_iters` iterations, which vanishes once
// final_rho is at least early_rho.
struct Schedule {
    std::size_t total_iters = 750;
    double final_rho = 1.0;
    double early_rho = 12.0;
    std::size_t early_iters = 250;
    double momentum_early = 0.5;
    double momentum_late = 0.8;
    std::size_t momentum_switch = 250;

    double rho_at(std::size_t iter) const {
        return iter < early_iters ? std::max(early_rho, final_rho) : final_rho;
    }
    double momentum_at(std::size_t iter) const {
        return iter < momentum_switch ? momentum_early : momentum_late;
    }
    // Conventional learning rate n / max(rho, rho_early). The attractive term
    // here is written in v = n * p, so the integrator applies the equivalent
    // per-field factor rho_t / max(rho, rho_early); see step_factor.
    double learning_rate(std::size_t n) const {
        return static_cast<double>(n) / std::max(final_rho, early_rho);
    }
    double step_factor(std::size_t iter) const {
        return rho_at(iter) / std::max(final_rho, early_rho);
    }
};

struct TraceRecord {
    std::size_t iter = 0;
    double z = 0.0;            // NaN when the method defines no partition sum
    double n_over_rho_z = 0.0; // NaN likewise
    double span_x = 0.0, span_y = 0.0;
    double grad_norm = 0.0;    // mean per-point force norm
};

struct RunTrace {
    std::size_t cadence = 10;
    std::vector<TraceRecord> records;
};

enum class RunStatus { Completed, Diverged };

struct RunResult {
    Embedding embedding;
    RunTrace trace;
    RunStatus status = RunStatus::Completed;
    std::size_t iterations_run = 0;
};

struct OptimOptions {
    double theta = 0.5;          // Barnes-Hut accuracy; 0 = exact sums
    int threads = 1;
    std::size_t trace_cadence = 10;
    double span_limit = 1e8;     // divergence guard
};

// Batch gradient descent with momentum and per-coordinate adaptive gains.
RunResult run_tsne(const AffinityGraph& a, const Embedding& y0, const Schedule& sched,
                   const OptimOptions& opt = {});

// Same integrator with the smoothed heavy-tail repulsion in place of the
// normalized one. The schedule's exaggeration divides gamma during the early
// phase; pass early_iters = 0 for the plain run.
RunResult run_umap_full(const AffinityGraph& a, const Embedding& y0, double gamma,
                        double epsilon, const Schedule& sched, const OptimOptions& opt = {});

struct NegSampleConfig {
    int nu = 5;                       // negative samples per positive edge
    double gamma = 1.0;
    double epsilon = 1e-3;
    std::size_t epochs = 750;
    bool move_tail_on_attraction = true;
    double clip = 4.0;                // per-coordinate update cap
    double lr0 = 1.0;                 // linear decay to lr0/epochs
};

// Sequential stochastic optimizer over directed positive edges: one attractive
// update per edge plus nu uniformly drawn repulsive updates applied to the
// head. Deterministic for a fixed seed.
RunResult run_umap_ns(const AffinityGraph& a, const Embedding& y0, const NegSampleConfig& cfg,
                      std::uint64_t seed, const OptimOptions& opt = {});

struct Fa2Options {
    std::size_t iters = 750;
    bool edge_repulsion = true;
    double force_tolerance = 0.0; // stop below this mean force norm; 0 = run all iterations
};

// Force-directed layout on the knn graph: linear edge attraction against
// degree-mass inverse-square repulsion, integrated with the shared momentum
// rule, step 1 / mean degree, and a per-iteration force cap at the 99th
// percentile of point force norms.
RunResult run_fa2(const NeighborGraph& g, const Embedding& y0, const Fa2Options& cfg,
                  const OptimOptions& opt = {});

} // namespace nesp
