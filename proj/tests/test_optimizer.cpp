#include <cmath>
#include <vector>

#include "doctest.h"
#include "nesp/affinity.hpp"
#include "nesp/dataset.hpp"
#include "nesp/forces.hpp"
#include "nesp/knn.hpp"
#include "nesp/metrics.hpp"
#include "nesp/optimizer.hpp"
#include "nesp/pca.hpp"
#include "nesp/rng.hpp"

using namespace nesp;

namespace {

struct Setup {
    Matrix x;
    AffinityGraph gaussian;
    AffinityGraph binary;
    NeighborGraph undirected;
    Embedding y0_tsne, y0_umap;
};

Setup make_setup(std::size_t clusters, std::size_t per, std::uint64_t seed) {
    Setup s;
    s.x = gen_gaussian_chain(clusters, per, 6, 5.0, seed);
    const NeighborGraph g = build_knn(s.x, 15, KnnAlgorithm::Auto, 2);
    s.gaussian = perplexity_calibrate(g, 5.0, {}, 2);
    s.undirected = symmetrize_union(g);
    s.binary = binary_affinities(s.undirected);
    InitConfig cfg;
    cfg.seed = seed;
    s.y0_tsne = make_init(s.x, cfg, Method::Tsne);
    s.y0_umap = make_init(s.x, cfg, Method::UmapBh);
    return s;
}

} // namespace

TEST_CASE("schedule arithmetic") {
    Schedule s;
    s.total_iters = 750;
    s.final_rho = 1.0;
    s.early_rho = 12.0;
    s.early_iters = 250;

    CHECK(s.rho_at(0) == 12.0);
    CHECK(s.rho_at(249) == 12.0);
    CHECK(s.rho_at(250) == 1.0);
    CHECK(s.momentum_at(0) == 0.5);
    CHECK(s.momentum_at(250) == 0.8);
    CHECK(s.learning_rate(1200) == doctest::Approx(100.0));
    CHECK(s.step_factor(0) == doctest::Approx(1.0));
    CHECK(s.step_factor(400) == doctest::Approx(1.0 / 12.0));

    s.final_rho = 30.0; // above the early value: no early phase effectively
    CHECK(s.rho_at(0) == 30.0);
    CHECK(s.rho_at(500) == 30.0);
    CHECK(s.learning_rate(1200) == doctest::Approx(40.0));
    CHECK(s.step_factor(0) == doctest::Approx(1.0));
    CHECK(s.step_factor(700) == doctest::Approx(1.0));
}

TEST_CASE("trace cadence, partition-sum bounds, and span consistency") {
    const Setup s = make_setup(4, 100, 11);
    Schedule sched;
    sched.total_iters = 55;
    sched.early_iters = 20;
    OptimOptions opt;
    opt.threads = 2;
    const RunResult r = run_tsne(s.gaussian, s.y0_tsne, sched, opt);

    REQUIRE(r.status == RunStatus::Completed);
    REQUIRE(r.iterations_run == 55);
    // Records at multiples of the cadence plus a final one.
    REQUIRE(r.trace.records.size() == 7);
    CHECK(r.trace.records.front().iter == 0);
    CHECK(r.trace.records[3].iter == 30);
    CHECK(r.trace.records.back().iter == 55);

    const std::size_t n = s.gaussian.n;
    for (const TraceRecord& rec : r.trace.records) {
        REQUIRE(std::isfinite(rec.z));
        // Z sums n(n-1) weights, each in (w(max dist), 1].
        const double d2max = rec.span_x * rec.span_x + rec.span_y * rec.span_y;
        const double lo = double(n) * double(n - 1) / (1.0 + d2max);
        CHECK(rec.z > lo * 0.99);
        CHECK(rec.z < double(n) * double(n - 1) * 1.0000001);
        CHECK(rec.grad_norm >= 0.0);
        CHECK(rec.n_over_rho_z > 0.0);
    }

    // Final record reflects the returned layout.
    double xlo = 1e300, xhi = -1e300, ylo = 1e300, yhi = -1e300;
    for (std::size_t i = 0; i < r.embedding.n; ++i) {
        xlo = std::min(xlo, r.embedding.x(i));
        xhi = std::max(xhi, r.embedding.x(i));
        ylo = std::min(ylo, r.embedding.y(i));
        yhi = std::max(yhi, r.embedding.y(i));
    }
    CHECK(r.trace.records.back().span_x == doctest::Approx(xhi - xlo).epsilon(1e-12));
    CHECK(r.trace.records.back().span_y == doctest::Approx(yhi - ylo).epsilon(1e-12));
}

TEST_CASE("normalized repulsion share falls as exaggeration grows") {
    const Setup s = make_setup(5, 80, 13);
    OptimOptions opt;
    opt.threads = 2;
    std::vector<double> shares;
    for (const double rho : {1.0, 4.0, 30.0}) {
        Schedule sched;
        sched.total_iters = 300;
        sched.final_rho = rho;
        const RunResult r = run_tsne(s.gaussian, s.y0_tsne, sched, opt);
        REQUIRE(r.status == RunStatus::Completed);
        shares.push_back(r.trace.records.back().n_over_rho_z);
    }
    CHECK(shares[0] > shares[1]);
    CHECK(shares[1] > shares[2]);
}

TEST_CASE("runs are deterministic for fixed inputs and threads do not matter") {
    const Setup s = make_setup(3, 60, 17);
    Schedule sched;
    sched.total_iters = 80;
    sched.early_iters = 30;
    OptimOptions one, four;
    one.threads = 1;
    four.threads = 4;
    const RunResult a = run_tsne(s.gaussian, s.y0_tsne, sched, one);
    const RunResult b = run_tsne(s.gaussian, s.y0_tsne, sched, four);
    CHECK(a.embedding.coords == b.embedding.coords);
}

TEST_CASE("exaggeration in the heavy-tail limit reduces to pure attraction") {
    const Setup s = make_setup(3, 50, 19);
    // At a tiny layout scale all pairwise weights are ~1 and the normalized
    // repulsion carries an O(1/rho) coefficient; by rho = 1e4 it is invisible
    // next to the attraction at any point with nonnegligible pull.
    ForceSpec spec;
    spec.method = ForceMethod::Tsne;
    spec.rho = 1e4;
    const ForceField full =
        assemble_gradient(spec, &s.gaussian, nullptr, nullptr, s.y0_tsne, 1);
    const ForceField att = attraction(s.gaussian, s.y0_tsne, AttractionKernel::Cauchy,
                                      s.gaussian.gradient_weight_scale(), 1);
    double num = 0.0, den = 0.0;
    for (std::size_t t = 0; t < full.values.size(); ++t) {
        num += (full.values[t] - att.values[t]) * (full.values[t] - att.values[t]);
        den += att.values[t] * att.values[t];
    }
    CHECK(std::sqrt(num / den) < 0.01);
}

TEST_CASE("approximate and exact runs land on layouts of the same scale") {
    const Setup s = make_setup(4, 150, 23);
    Schedule sched;
    sched.total_iters = 200;
    sched.early_iters = 80;
    OptimOptions exact, bh;
    exact.theta = 0.0;
    exact.threads = 2;
    bh.theta = 0.5;
    bh.threads = 2;
    const RunResult re = run_tsne(s.gaussian, s.y0_tsne, sched, exact);
    const RunResult rb = run_tsne(s.gaussian, s.y0_tsne, sched, bh);
    REQUIRE(re.status == RunStatus::Completed);
    REQUIRE(rb.status == RunStatus::Completed);
    const double se = embedding_span(re.embedding);
    const double sb = embedding_span(rb.embedding);
    CHECK(std::fabs(se - sb) / se < 0.05);
    // Tiny per-step approximation differences compound over the trajectory,
    // so only broad agreement of the final geometry is a stable property.
    CHECK(distance_correlation(re.embedding, rb.embedding) > 0.85);
}

TEST_CASE("repulsion weight controls the layout scale monotonically") {
    const Setup s = make_setup(3, 100, 29);
    Schedule sched;
    sched.total_iters = 200;
    sched.early_iters = 0;
    OptimOptions opt;
    opt.threads = 2;
    const RunResult lo = run_umap_full(s.binary, s.y0_umap, 0.25, 1e-3, sched, opt);
    const RunResult hi = run_umap_full(s.binary, s.y0_umap, 4.0, 1e-3, sched, opt);
    REQUIRE(lo.status == RunStatus::Completed);
    REQUIRE(hi.status == RunStatus::Completed);
    CHECK(embedding_span(hi.embedding) > embedding_span(lo.embedding) * 1.5);
}

TEST_CASE("sampled repulsion: scale-equivalence of (nu, gamma) at fixed product") {
    const Setup s = make_setup(3, 120, 31);
    NegSampleConfig a, b;
    a.nu = 5;
    a.gamma = 1.0;
    a.epochs = 200;
    b.nu = 20;
    b.gamma = 0.25;
    b.epochs = 200;
    const RunResult ra = run_umap_ns(s.binary, s.y0_umap, a, 7);
    const RunResult rb = run_umap_ns(s.binary, s.y0_umap, b, 7);
    REQUIRE(ra.status == RunStatus::Completed);
    REQUIRE(rb.status == RunStatus::Completed);
    const double sa = embedding_span(ra.embedding);
    const double sb = embedding_span(rb.embedding);
    CHECK(std::fabs(sa - sb) / sa < 0.15);
    CHECK(distance_correlation(ra.embedding, rb.embedding) > 0.9);
}

TEST_CASE("sampled repulsion: mean displacement depends only on nu * gamma") {
    // One epoch at lr = 1e-5 keeps every update tiny, so the epoch's net motion
    // is the superposition of per-sample kicks. Subtracting a nu = 0 run
    // isolates the repulsive part; its seed-averaged magnitude must match
    // across (nu, gamma) pairs with the same product. Gamma stays <= 0.2 so
    // the per-coordinate cap never binds (the sample coefficient times the
    // distance peaks near 16 * gamma).
    const Setup s = make_setup(5, 100, 59);
    const Embedding& y0 = s.y0_umap;

    auto one_epoch = [&](int nu, double gamma, std::uint64_t seed) {
        NegSampleConfig cfg;
        cfg.nu = nu;
        cfg.gamma = gamma;
        cfg.epochs = 1;
        cfg.lr0 = 1e-5;
        return run_umap_ns(s.binary, y0, cfg, seed);
    };

    const RunResult base = one_epoch(0, 0.2, 1);
    std::vector<double> ax(y0.n), ay(y0.n);
    for (std::size_t i = 0; i < y0.n; ++i) {
        ax[i] = base.embedding.x(i) - y0.x(i);
        ay[i] = base.embedding.y(i) - y0.y(i);
    }

    const int seeds = 16;
    std::vector<double> stat;
    for (const auto& [nu, gamma] :
         std::vector<std::pair<int, double>>{{20, 0.2}, {40, 0.1}, {200, 0.02}}) {
        std::vector<double> rx(y0.n, 0.0), ry(y0.n, 0.0);
        for (int t = 0; t < seeds; ++t) {
            const RunResult r = one_epoch(nu, gamma, 100 + std::uint64_t(t));
            REQUIRE(r.status == RunStatus::Completed);
            for (std::size_t i = 0; i < y0.n; ++i) {
                rx[i] += (r.embedding.x(i) - y0.x(i) - ax[i]) / seeds;
                ry[i] += (r.embedding.y(i) - y0.y(i) - ay[i]) / seeds;
            }
        }
        double sum = 0.0;
        for (std::size_t i = 0; i < y0.n; ++i) sum += std::hypot(rx[i], ry[i]);
        stat.push_back(sum / double(y0.n));
        CHECK(stat.back() > 0.0);
    }
    for (const double v : stat) {
        CHECK(v / stat[0] > 0.98);
        CHECK(v / stat[0] < 1.02);
    }
}

TEST_CASE("sampled repulsion is seed-deterministic") {
    const Setup s = make_setup(3, 40, 37);
    NegSampleConfig cfg;
    cfg.epochs = 50;
    const RunResult a = run_umap_ns(s.binary, s.y0_umap, cfg, 42);
    const RunResult b = run_umap_ns(s.binary, s.y0_umap, cfg, 42);
    const RunResult c = run_umap_ns(s.binary, s.y0_umap, cfg, 43);
    CHECK(a.embedding.coords == b.embedding.coords);
    CHECK(a.embedding.coords != c.embedding.coords);
}

TEST_CASE("without negative samples the layout contracts") {
    const Setup s = make_setup(3, 60, 41);
    NegSampleConfig cfg;
    cfg.nu = 0;
    cfg.epochs = 100;
    const RunResult r = run_umap_ns(s.binary, s.y0_umap, cfg, 3);
    REQUIRE(r.status == RunStatus::Completed);
    CHECK(embedding_span(r.embedding) < embedding_span(s.y0_umap) * 0.8);
}

TEST_CASE("force-directed: degree masses spread the layout") {
    const Setup s = make_setup(3, 80, 43);
    InitConfig cfg;
    cfg.seed = 43;
    const Embedding y0 = make_init(s.x, cfg, Method::Fa2);
    Fa2Options with, without;
    with.iters = 150;
    without.iters = 150;
    without.edge_repulsion = false;
    OptimOptions opt;
    opt.threads = 2;
    const RunResult rw = run_fa2(s.undirected, y0, with, opt);
    const RunResult ro = run_fa2(s.undirected, y0, without, opt);
    REQUIRE(rw.status == RunStatus::Completed);
    REQUIRE(ro.status == RunStatus::Completed);
    // Pairwise equilibrium distances scale like sqrt of the mass product, so
    // the degree masses (~k+1 per endpoint) should widen the layout several-fold.
    CHECK(embedding_span(rw.embedding) > 3.0 * embedding_span(ro.embedding));
}

TEST_CASE("force-directed early stop on a converged layout") {
    const Setup s = make_setup(2, 40, 47);
    InitConfig cfg;
    cfg.seed = 47;
    const Embedding y0 = make_init(s.x, cfg, Method::Fa2);
    Fa2Options first;
    first.iters = 400;
    const RunResult settled = run_fa2(s.undirected, y0, first, {});
    REQUIRE(settled.status == RunStatus::Completed);

    Fa2Options resume;
    resume.iters = 400;
    resume.force_tolerance = settled.trace.records.back().grad_norm * 4.0;
    const RunResult r = run_fa2(s.undirected, settled.embedding, resume, {});
    CHECK(r.iterations_run < 400);
}

TEST_CASE("runaway repulsion is reported as divergence") {
    const Setup s = make_setup(2, 50, 53);
    Schedule sched;
    sched.total_iters = 200;
    sched.early_iters = 0;
    const RunResult r = run_umap_full(s.binary, s.y0_umap, 1e12, 1e-3, sched, {});
    CHECK(r.status == RunStatus::Diverged);
    CHECK(r.iterations_run < 200);
    CHECK(r.trace.records.back().iter == r.iterations_run);
}
