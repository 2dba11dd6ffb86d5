// Command line front end: dataset generation, embedding runs, rho sweeps and
// repulsion-weight matching, with JSON manifests for reproducibility.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "nesp/affinity.hpp"
#include "nesp/common.hpp"
#include "nesp/dataset.hpp"
#include "nesp/knn.hpp"
#include "nesp/metrics.hpp"
#include "nesp/optimizer.hpp"
#include "nesp/parallel.hpp"
#include "nesp/pca.hpp"
#include "nesp/serialize.hpp"
#include "nesp/spectral.hpp"
#include "nesp/svg.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace nesp;

namespace {

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

MatrixFormat sniff_format(const std::string& path) {
    if (path.size() > 4 && path.substr(path.size() - 4) == ".csv") return MatrixFormat::Csv;
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw DataError(path + ": cannot open");
    unsigned char head[4] = {0, 0, 0, 0};
    const std::size_t got = std::fread(head, 1, 4, f);
    std::fclose(f);
    if (got == 4 && head[0] == 0 && head[1] == 0 && head[2] == 0x08 && head[3] == 0x03)
        return MatrixFormat::IdxImages;
    return MatrixFormat::RawF32;
}

Matrix load_inputs(const std::vector<std::string>& paths, const std::string& format) {
    Matrix x;
    for (const std::string& p : paths) {
        const MatrixFormat fmt = format == "auto" ? sniff_format(p) : format_from_name(format);
        Matrix part = load_matrix(p, fmt);
        x = x.empty() ? std::move(part) : vstack(x, part);
    }
    return x;
}

std::vector<int> load_label_files(const std::vector<std::string>& paths) {
    std::vector<int> labels;
    for (const std::string& p : paths) {
        std::vector<int> part = load_labels(p);
        labels.insert(labels.end(), part.begin(), part.end());
    }
    return labels;
}

void write_manifest(const fs::path& dir, const char* command, const json& params,
                    const std::vector<std::string>& outputs, double elapsed_s,
                    const std::vector<std::string>& argv_echo) {
    json j;
    j["engine"] = kEngineVersion;
    j["command"] = command;
    j["argv"] = argv_echo;
    j["params"] = params;
    j["outputs"] = outputs;
    j["elapsed_s"] = elapsed_s;
    write_json_file((dir / "manifest.json").string(), j);
}

// Shared embed/sweep data options.
struct DataArgs {
    std::vector<std::string> inputs;
    std::string input_format = "auto";
    std::vector<std::string> label_files;
    std::size_t pca_dim = 50;
    std::size_t subsample = 0;
    std::uint64_t seed = 1;

    void attach(CLI::App* cmd) {
        cmd->add_option("--input", inputs, "input matrix file (repeat to stack row-wise)")
            ->required();
        cmd->add_option("--input-format", input_format, "auto|csv|idx|raw-f32")
            ->check(CLI::IsMember({"auto", "csv", "idx", "raw-f32"}));
        cmd->add_option("--labels", label_files, "label file(s), text or idx (repeat to stack)");
        cmd->add_option("--pca-dim", pca_dim, "PCA pre-reduction dimension, 0 = off");
        cmd->add_option("--subsample", subsample, "seeded row subsample, 0 = all rows");
        cmd->add_option("--seed", seed, "run seed");
    }

    Matrix load(std::vector<int>& labels) const {
        Matrix x = load_inputs(inputs, input_format);
        labels = load_label_files(label_files);
        if (!labels.empty() && labels.size() != x.rows)
            throw DataError("label count " + std::to_string(labels.size()) +
                            " does not match row count " + std::to_string(x.rows));
        if (subsample > 0 && subsample < x.rows) {
            std::vector<std::size_t> picked;
            x = subsample_rows(x, subsample, seed, &picked);
            if (!labels.empty()) {
                std::vector<int> sub(picked.size());
                for (std::size_t i = 0; i < picked.size(); ++i) sub[i] = labels[picked[i]];
                labels = std::move(sub);
            }
        }
        if (pca_dim > 0 && x.cols > pca_dim) x = pca_reduce(x, pca_dim).projected;
        return x;
    }

    json echo() const {
        return {{"inputs", inputs},      {"input_format", input_format},
                {"labels", label_files}, {"pca_dim", pca_dim},
                {"subsample", subsample}, {"seed", seed}};
    }
};

AffinityGraph make_affinity(const Matrix& x, const std::string& kind, double perplexity,
                            std::size_t k, int threads, NeighborGraph* knn_out = nullptr) {
    if (kind == "gaussian") {
        const std::size_t kk = k > 0 ? k : static_cast<std::size_t>(3.0 * perplexity);
        NeighborGraph g = build_knn(x, kk, KnnAlgorithm::Auto, threads);
        AffinityGraph a = perplexity_calibrate(g, perplexity, {}, threads);
        if (knn_out) *knn_out = std::move(g);
        return a;
    }
    const std::size_t kk = k > 0 ? k : 15;
    NeighborGraph g = build_knn(x, kk, KnnAlgorithm::Auto, threads);
    AffinityGraph a = binary_affinities(symmetrize_union(g));
    if (knn_out) *knn_out = std::move(g);
    return a;
}

int finish_embed_outputs(const fs::path& out_dir, const RunResult& run,
                         const std::vector<int>& labels, const std::string& out_format,
                         bool svg, std::vector<std::string>& outputs) {
    if (out_format == "csv") {
        const fs::path p = out_dir / "embedding.csv";
        save_embedding_csv(p.string(), run.embedding);
        outputs.push_back(p.string());
    } else {
        const fs::path p = out_dir / "embedding.f32";
        save_raw_f32(run.embedding.as_matrix(), p.string());
        outputs.push_back(p.string());
    }
    {
        json t = trace_to_json(run.trace);
        t["status"] = run.status == RunStatus::Completed ? "completed" : "diverged";
        t["iterations"] = run.iterations_run;
        const fs::path p = out_dir / "trace.json";
        write_json_file(p.string(), t);
        outputs.push_back(p.string());
    }
    if (svg) {
        const fs::path p = out_dir / "scatter.svg";
        svg_scatter(p.string(), run.embedding, labels);
        outputs.push_back(p.string());
    }
    if (run.status != RunStatus::Completed) {
        std::fprintf(stderr, "error: run diverged at iteration %zu (outputs written)\n",
                     run.iterations_run);
        return 4;
    }
    return 0;
}

struct EmbedCmd {
    DataArgs data;
    std::string method = "tsne";
    std::string affinity = "default";
    std::string out_dir = "out";
    std::string out_format = "csv";
    std::string init_mode = "pca";
    std::string warm_start;
    double perplexity = 30.0;
    std::size_t k = 0;
    double rho = 1.0;
    double early_rho = 12.0;
    std::size_t early_iters = 250;
    std::size_t iters = 750;
    double theta = 0.5;
    double gamma = 1.0;
    double epsilon = 1e-3;
    int nu = 5;
    std::size_t epochs = 750;
    double lr0 = 1.0;
    double clip = 4.0;
    bool no_move_tail = false;
    bool no_edge_repulsion = false;
    double force_tol = 0.0;
    std::size_t components = 2;
    std::size_t trace_cadence = 10;
    bool svg = false;

    CLI::App* cmd = nullptr;

    void attach(CLI::App& app) {
        cmd = app.add_subcommand("embed", "run one embedding method on a dataset");
        data.attach(cmd);
        cmd->add_option("--method", method, "tsne|umap-ns|umap-bh|fa2|le")
            ->check(CLI::IsMember({"tsne", "umap-ns", "umap-bh", "fa2", "le"}));
        cmd->add_option("--affinity", affinity, "gaussian|binary (default per method)")
            ->check(CLI::IsMember({"default", "gaussian", "binary"}));
        cmd->add_option("--out", out_dir, "output directory");
        cmd->add_option("--out-format", out_format, "csv|raw-f32 embedding format")
            ->check(CLI::IsMember({"csv", "raw-f32"}));
        cmd->add_option("--init", init_mode, "pca|random layout initialization")
            ->check(CLI::IsMember({"pca", "random"}));
        cmd->add_option("--warm-start", warm_start, "embedding csv used verbatim as start");
        cmd->add_option("--perplexity", perplexity, "gaussian affinity perplexity");
        cmd->add_option("--k", k, "knn neighbors (0: 3*perplexity gaussian, 15 binary)");
        cmd->add_option("--rho", rho, "attraction exaggeration (tsne)");
        cmd->add_option("--early-rho", early_rho, "early phase exaggeration");
        cmd->add_option("--early-iters", early_iters, "early phase length (tsne)");
        cmd->add_option("--iters", iters, "batch iterations");
        cmd->add_option("--theta", theta, "Barnes-Hut opening angle, 0 = exact");
        cmd->add_option("--gamma", gamma, "repulsion weight (umap)");
        cmd->add_option("--epsilon", epsilon, "repulsion smoothing (umap)");
        cmd->add_option("--nu", nu, "negative samples per edge (umap-ns)");
        cmd->add_option("--epochs", epochs, "umap-ns epochs");
        cmd->add_option("--lr0", lr0, "umap-ns initial step");
        cmd->add_option("--clip", clip, "umap-ns per-coordinate update cap");
        cmd->add_flag("--no-move-tail", no_move_tail, "umap-ns: attraction moves head only");
        cmd->add_flag("--no-edge-repulsion", no_edge_repulsion, "fa2: unit repulsion masses");
        cmd->add_option("--force-tol", force_tol, "fa2 stop threshold on mean force norm");
        cmd->add_option("--components", components, "le eigenvector count");
        cmd->add_option("--trace-cadence", trace_cadence, "iterations between trace records");
        cmd->add_flag("--svg", svg, "write a scatter plot");
    }

    json echo() const {
        json p = data.echo();
        p["method"] = method;
        p["affinity"] = affinity;
        p["out_format"] = out_format;
        p["init"] = init_mode;
        p["warm_start"] = warm_start;
        p["perplexity"] = perplexity;
        p["k"] = k;
        p["rho"] = rho;
        p["early_rho"] = early_rho;
        p["early_iters"] = early_iters;
        p["iters"] = iters;
        p["theta"] = theta;
        p["gamma"] = gamma;
        p["epsilon"] = epsilon;
        p["nu"] = nu;
        p["epochs"] = epochs;
        p["lr0"] = lr0;
        p["clip"] = clip;
        p["move_tail"] = !no_move_tail;
        p["edge_repulsion"] = !no_edge_repulsion;
        p["force_tol"] = force_tol;
        p["components"] = components;
        p["trace_cadence"] = trace_cadence;
        return p;
    }

    int run(int threads, const std::vector<std::string>& argv_echo) {
        const Timer timer;
        std::vector<int> labels;
        const Matrix x = data.load(labels);
        const fs::path dir(out_dir);
        fs::create_directories(dir);

        const Method m = method_from_name(method);
        const std::string aff_kind =
            affinity != "default" ? affinity : (m == Method::Tsne ? "gaussian" : "binary");

        OptimOptions opt;
        opt.theta = theta;
        opt.threads = threads;
        opt.trace_cadence = trace_cadence;

        std::vector<std::string> outputs;
        json params = echo();
        params["threads"] = threads;
        params["n"] = x.rows;
        params["dim"] = x.cols;

        if (m == Method::Le) {
            const AffinityGraph aff = make_affinity(x, aff_kind, perplexity, k, threads);
            SpectralOptions sopt;
            sopt.threads = threads;
            sopt.seed = data.seed;
            const SpectralResult spec = laplacian_eigenmaps(aff, components, sopt);
            const fs::path p = dir / "embedding.csv";
            if (components >= 2) {
                save_embedding_csv(p.string(), spec.embedding);
            } else {
                save_csv(spec.vectors, p.string());
            }
            outputs.push_back(p.string());
            if (components > 2) {
                const fs::path pv = dir / "components.csv";
                save_csv(spec.vectors, pv.string());
                outputs.push_back(pv.string());
            }
            if (svg && components >= 2) {
                const fs::path ps = dir / "scatter.svg";
                svg_scatter(ps.string(), spec.embedding, labels);
                outputs.push_back(ps.string());
            }
            params["eigenvalues"] = spec.eigenvalues;
            params["zero_multiplicity"] = spec.zero_multiplicity;
            params["disconnected"] = spec.disconnected;
            write_manifest(dir, "embed", params, outputs, timer.seconds(), argv_echo);
            return 0;
        }

        Embedding y0;
        if (!warm_start.empty()) {
            y0 = load_embedding_csv(warm_start);
            if (y0.n != x.rows) throw DataError("warm start size does not match dataset");
        } else {
            InitConfig cfg;
            cfg.mode = init_mode == "random" ? InitMode::Random : InitMode::Pca;
            cfg.seed = data.seed;
            y0 = make_init(x, cfg, m);
        }

        RunResult run;
        if (m == Method::Tsne) {
            const AffinityGraph aff = make_affinity(x, aff_kind, perplexity, k, threads);
            Schedule sched;
            sched.total_iters = iters;
            sched.final_rho = rho;
            sched.early_rho = early_rho;
            sched.early_iters = early_iters;
            run = run_tsne(aff, y0, sched, opt);
        } else if (m == Method::UmapBh) {
            const AffinityGraph aff = make_affinity(x, aff_kind, perplexity, k, threads);
            Schedule sched;
            sched.total_iters = iters;
            sched.final_rho = 1.0;
            sched.early_rho = early_rho;
            sched.early_iters = 0;
            run = run_umap_full(aff, y0, gamma, epsilon, sched, opt);
        } else if (m == Method::UmapNs) {
            const AffinityGraph aff = make_affinity(x, aff_kind, perplexity, k, threads);
            NegSampleConfig cfg;
            cfg.nu = nu;
            cfg.gamma = gamma;
            cfg.epsilon = epsilon;
            cfg.epochs = epochs;
            cfg.move_tail_on_attraction = !no_move_tail;
            cfg.clip = clip;
            cfg.lr0 = lr0;
            run = run_umap_ns(aff, y0, cfg, data.seed, opt);
        } else {
            const std::size_t kk = k > 0 ? k : 15;
            const NeighborGraph g = symmetrize_union(build_knn(x, kk, KnnAlgorithm::Auto,
                                                               threads));
            Fa2Options cfg;
            cfg.iters = iters;
            cfg.edge_repulsion = !no_edge_repulsion;
            cfg.force_tolerance = force_tol;
            run = run_fa2(g, y0, cfg, opt);
        }

        if (!run.trace.records.empty()) {
            const TraceRecord& last = run.trace.records.back();
            params["final_Z"] = std::isfinite(last.z) ? json(last.z) : json();
            params["final_span"] = std::max(last.span_x, last.span_y);
        }
        const int rc = finish_embed_outputs(dir, run, labels, out_format, svg, outputs);
        params["status"] = run.status == RunStatus::Completed ? "completed" : "diverged";
        write_manifest(dir, "embed", params, outputs, timer.seconds(), argv_echo);
        return rc;
    }
};

struct SweepCmd {
    DataArgs data;
    std::string reference;
    std::string out_dir = "sweep";
    double rho_lo = 1.0, rho_hi = 100.0;
    std::size_t rho_count = 50;
    double perplexity = 30.0;
    std::size_t k = 0;
    std::size_t iters = 750;
    double theta = 0.5;
    std::size_t recall_k = 15;
    std::size_t recall_samples = 10000;
    std::size_t dcor_sample = 5000;
    bool svg = false;

    CLI::App* cmd = nullptr;

    void attach(CLI::App& app) {
        cmd = app.add_subcommand("sweep",
                                 "t-SNE exaggeration sweep scored against a reference layout");
        data.attach(cmd);
        cmd->add_option("--reference", reference, "reference embedding csv")->required();
        cmd->add_option("--out", out_dir, "output directory");
        cmd->add_option("--rho-lo", rho_lo, "grid low end");
        cmd->add_option("--rho-hi", rho_hi, "grid high end");
        cmd->add_option("--rho-count", rho_count, "log-spaced grid points (4 and 30 inserted)");
        cmd->add_option("--perplexity", perplexity, "gaussian affinity perplexity");
        cmd->add_option("--k", k, "knn neighbors (0: 3*perplexity)");
        cmd->add_option("--iters", iters, "iterations per grid point");
        cmd->add_option("--theta", theta, "Barnes-Hut opening angle");
        cmd->add_option("--recall-k", recall_k, "neighbors scored by recall");
        cmd->add_option("--recall-samples", recall_samples, "points sampled for recall");
        cmd->add_option("--dcor-sample", dcor_sample, "points sampled for distance correlation");
        cmd->add_flag("--svg", svg, "write the score curves");
    }

    int run(int threads, const std::vector<std::string>& argv_echo) {
        const Timer timer;
        std::vector<int> labels;
        const Matrix x = data.load(labels);
        const Embedding ref = load_embedding_csv(reference);
        if (ref.n != x.rows) throw DataError("reference layout size does not match dataset");
        const fs::path dir(out_dir);
        fs::create_directories(dir);

        std::vector<double> rhos = log_spaced(rho_lo, rho_hi, rho_count);
        for (const double ins : {4.0, 30.0})
            if (ins >= rho_lo && ins <= rho_hi) rhos.push_back(ins);
        std::sort(rhos.begin(), rhos.end());
        rhos.erase(std::unique(rhos.begin(), rhos.end()), rhos.end());

        const AffinityGraph aff = make_affinity(x, "gaussian", perplexity, k, threads);
        InitConfig init_cfg;
        init_cfg.seed = data.seed;
        const Embedding y0 = make_init(x, init_cfg, Method::Tsne);

        OptimOptions opt;
        opt.theta = theta;
        opt.threads = threads;

        std::FILE* table = std::fopen((dir / "sweep.csv").string().c_str(), "w");
        if (!table) throw DataError("cannot write sweep table");
        std::fprintf(table, "rho,dcor,recall,final_Z,final_n_over_rhoZ,span\n");

        std::vector<double> dcors, recalls;
        double best_rho = 0.0, best_dcor = -1.0;
        for (const double rho : rhos) {
            Schedule sched;
            sched.total_iters = iters;
            sched.final_rho = rho;
            const RunResult run = run_tsne(aff, y0, sched, opt);
            if (run.status != RunStatus::Completed) {
                std::fprintf(stderr, "warning: rho %.4g diverged, skipping row\n", rho);
                dcors.push_back(0.0);
                recalls.push_back(0.0);
                continue;
            }
            const double dcor =
                distance_correlation(run.embedding, ref, dcor_sample, data.seed);
            const double recall =
                knn_recall(aff, run.embedding, recall_k, recall_samples, data.seed, threads);
            const TraceRecord& last = run.trace.records.back();
            std::fprintf(table, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", rho, dcor, recall,
                         last.z, last.n_over_rho_z, embedding_span(run.embedding));
            dcors.push_back(dcor);
            recalls.push_back(recall);
            if (dcor > best_dcor) {
                best_dcor = dcor;
                best_rho = rho;
            }
        }
        std::fclose(table);

        std::vector<std::string> outputs{(dir / "sweep.csv").string()};
        if (svg) {
            SvgSeries sd{"dcor", rhos, dcors};
            SvgSeries sr{"recall", rhos, recalls};
            const fs::path p = dir / "sweep.svg";
            svg_curves(p.string(), {sd, sr}, true, false);
            outputs.push_back(p.string());
        }

        json params = data.echo();
        params["reference"] = reference;
        params["rho_grid"] = rhos;
        params["perplexity"] = perplexity;
        params["k"] = k;
        params["iters"] = iters;
        params["theta"] = theta;
        params["recall_k"] = recall_k;
        params["recall_samples"] = recall_samples;
        params["dcor_sample"] = dcor_sample;
        params["threads"] = threads;
        params["best_rho"] = best_rho;
        params["best_dcor"] = best_dcor;
        write_manifest(dir, "sweep", params, outputs, timer.seconds(), argv_echo);
        std::printf("best dcor %.4f at rho %.4g\n", best_dcor, best_rho);
        return 0;
    }
};

struct MatchGammaCmd {
    DataArgs data;
    std::string out_dir = "match-gamma";
    std::vector<std::size_t> sizes;
    double grid_lo = 1e-5, grid_hi = 1.0;
    std::size_t grid_count = 40;
    std::size_t k = 15;
    int nu = 5;
    double ns_gamma = 1.0;
    std::size_t epochs = 750;
    std::size_t full_iters = 400;
    double theta = 0.5;
    bool svg = false;

    CLI::App* cmd = nullptr;

    void attach(CLI::App& app) {
        cmd = app.add_subcommand(
            "match-gamma", "repulsion weight matching the sampled-repulsion layout size");
        data.attach(cmd);
        cmd->add_option("--out", out_dir, "output directory");
        cmd->add_option("--sizes", sizes, "subsample sizes")->required()->delimiter(',');
        cmd->add_option("--grid-lo", grid_lo, "weight grid low end");
        cmd->add_option("--grid-hi", grid_hi, "weight grid high end");
        cmd->add_option("--grid-count", grid_count, "log-spaced grid size");
        cmd->add_option("--k", k, "knn neighbors");
        cmd->add_option("--nu", nu, "negative samples per edge (reference runs)");
        cmd->add_option("--ns-gamma", ns_gamma, "reference run repulsion weight");
        cmd->add_option("--epochs", epochs, "reference run epochs");
        cmd->add_option("--full-iters", full_iters, "iterations per full-batch run");
        cmd->add_option("--theta", theta, "Barnes-Hut opening angle");
        cmd->add_flag("--svg", svg, "write the log-log plot");
    }

    int run(int threads, const std::vector<std::string>& argv_echo) {
        const Timer timer;
        std::vector<int> labels;
        const Matrix x = data.load(labels);
        const fs::path dir(out_dir);
        fs::create_directories(dir);

        GammaMatchOptions opt;
        opt.knn_k = k;
        opt.gamma_grid = log_spaced(grid_lo, grid_hi, grid_count);
        opt.ns.nu = nu;
        opt.ns.gamma = ns_gamma;
        opt.ns.epochs = epochs;
        opt.full_iters = full_iters;
        opt.theta = theta;
        opt.threads = threads;
        opt.seed = data.seed;

        const GammaMatchResult result = estimate_effective_gamma(x, sizes, opt);

        std::FILE* table = std::fopen((dir / "gamma.csv").string().c_str(), "w");
        if (!table) throw DataError("cannot write gamma table");
        std::fprintf(table, "n,gamma_eff,ns_span,matched_span,skipped\n");
        for (const GammaMatchPoint& p : result.points)
            std::fprintf(table, "%zu,%.17g,%.17g,%.17g,%d\n", p.n, p.gamma_eff, p.ns_span,
                         p.matched_span, p.skipped ? 1 : 0);
        std::fclose(table);

        std::vector<std::string> outputs{(dir / "gamma.csv").string()};
        std::size_t usable = 0;
        for (const GammaMatchPoint& p : result.points)
            if (!p.skipped) ++usable;
        if (svg && usable >= 2) {
            SvgSeries pts{"matched weight", {}, {}};
            SvgSeries fitline{"fit", {}, {}};
            for (const GammaMatchPoint& p : result.points) {
                if (p.skipped) continue;
                pts.x.push_back(static_cast<double>(p.n));
                pts.y.push_back(p.gamma_eff);
                fitline.x.push_back(static_cast<double>(p.n));
                fitline.y.push_back(std::exp(result.fit.intercept +
                                             result.fit.slope * std::log(double(p.n))));
            }
            const fs::path p = dir / "gamma.svg";
            svg_curves(p.string(), {pts, fitline}, true, true);
            outputs.push_back(p.string());
        }

        json params = data.echo();
        params["sizes"] = sizes;
        params["grid_lo"] = grid_lo;
        params["grid_hi"] = grid_hi;
        params["grid_count"] = grid_count;
        params["k"] = k;
        params["nu"] = nu;
        params["ns_gamma"] = ns_gamma;
        params["epochs"] = epochs;
        params["full_iters"] = full_iters;
        params["theta"] = theta;
        params["threads"] = threads;
        if (usable >= 2) {
            params["slope"] = result.fit.slope;
            params["intercept"] = result.fit.intercept;
            std::printf("slope %.4f over %zu sizes\n", result.fit.slope, usable);
        } else {
            std::printf("single usable size; slope undefined\n");
        }
        write_manifest(dir, "match-gamma", params, outputs, timer.seconds(), argv_echo);
        return 0;
    }
};

struct GenCmd {
    std::size_t clusters = 20;
    std::size_t per_cluster = 1000;
    std::size_t dim = 50;
    double spacing = 6.0;
    std::uint64_t seed = 1;
    std::string out = "chain.f32";
    std::string labels_out;
    std::string format = "auto";

    CLI::App* cmd = nullptr;

    void attach(CLI::App& app) {
        cmd = app.add_subcommand("gen", "generate the Gaussian-chain toy dataset");
        cmd->add_option("--clusters", clusters, "cluster count");
        cmd->add_option("--per-cluster", per_cluster, "points per cluster");
        cmd->add_option("--dim", dim, "ambient dimension");
        cmd->add_option("--spacing", spacing, "distance between adjacent cluster centers");
        cmd->add_option("--seed", seed, "generator seed");
        cmd->add_option("--out", out, "output file (.csv or raw f32)");
        cmd->add_option("--labels-out", labels_out, "cluster index file (text)");
        cmd->add_option("--format", format, "auto|csv|raw-f32")
            ->check(CLI::IsMember({"auto", "csv", "raw-f32"}));
    }

    int run(int, const std::vector<std::string>& argv_echo) {
        const Timer timer;
        const Matrix x = gen_gaussian_chain(clusters, per_cluster, dim, spacing, seed);
        const bool csv = format == "csv" ||
                         (format == "auto" && out.size() > 4 &&
                          out.substr(out.size() - 4) == ".csv");
        if (csv)
            save_csv(x, out);
        else
            save_raw_f32(x, out);
        std::vector<std::string> outputs{out};
        if (!labels_out.empty()) {
            const std::vector<int> labels = chain_labels(clusters, per_cluster);
            std::FILE* f = std::fopen(labels_out.c_str(), "w");
            if (!f) throw DataError(labels_out + ": cannot open for writing");
            for (const int l : labels) std::fprintf(f, "%d\n", l);
            std::fclose(f);
            outputs.push_back(labels_out);
        }
        const fs::path dir = fs::path(out).parent_path();
        json params{{"clusters", clusters}, {"per_cluster", per_cluster}, {"dim", dim},
                    {"spacing", spacing},   {"seed", seed},               {"out", out},
                    {"labels_out", labels_out}};
        write_manifest(dir.empty() ? fs::path(".") : dir, "gen", params, outputs,
                       timer.seconds(), argv_echo);
        return 0;
    }
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"neighbor embedding spectrum engine"};
    app.set_config("--config", "", "key=value config file (flags win)");
    app.set_version_flag("--version", std::string(kEngineVersion));
    int threads = 0;
    app.add_option("--threads", threads,
                   "worker threads, 0 = hardware (NE_THREADS caps either way)");
    app.require_subcommand(1);

    EmbedCmd embed;
    SweepCmd sweep;
    MatchGammaCmd match;
    GenCmd gen;
    embed.attach(app);
    sweep.attach(app);
    match.attach(app);
    gen.attach(app);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    const std::vector<std::string> argv_echo(argv, argv + argc);
    const int resolved = resolve_threads(threads);
    try {
        if (embed.cmd->parsed()) return embed.run(resolved, argv_echo);
        if (sweep.cmd->parsed()) return sweep.run(resolved, argv_echo);
        if (match.cmd->parsed()) return match.run(resolved, argv_echo);
        if (gen.cmd->parsed()) return gen.run(resolved, argv_echo);
    } catch (const UsageError& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return 2;
    } catch (const DivergenceError& e) {
        std::fprintf(stderr, "divergence: %s\n", e.what());
        return 4;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    }
    return 0;
}
