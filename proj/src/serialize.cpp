#include "nesp/serialize.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>

#include "nesp/common.hpp"
#include "nesp/dataset.hpp"

namespace nesp {
namespace {

void fail_io(const std::string& path, const char* what) {
    throw DataError(path + ": " + what);
}

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path);
    if (!f) fail_io(path, "cannot open for writing");
    return f;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream f(path);
    if (!f) fail_io(path, "cannot open for reading");
    return f;
}

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(const std::string& tok, const std::string& path) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0' || errno == ERANGE)
        fail_io(path, "malformed number");
    return v;
}

nlohmann::json nan_to_null(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

double null_to_nan(const nlohmann::json& j) {
    if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
    return j.get<double>();
}

} // namespace

void save_neighbor_graph(const std::string& path, const NeighborGraph& g) {
    std::ofstream f = open_out(path);
    f << "nesp-graph 1\n" << g.n << ' ' << g.k << ' ' << (g.directed ? 1 : 0) << '\n';
    for (std::size_t i = 0; i < g.n; ++i) {
        for (std::size_t t = 0; t < g.neighbors[i].size(); ++t) {
            const std::uint32_t j = g.neighbors[i][t];
            if (!g.directed && j < i) continue; // one line per pair
            f << i << ' ' << j << ' ' << fmt17(g.dist2[i][t]) << '\n';
        }
    }
    if (!f) fail_io(path, "write failed");
}

NeighborGraph load_neighbor_graph(const std::string& path) {
    std::ifstream f = open_in(path);
    std::string magic;
    int version = 0;
    f >> magic >> version;
    if (magic != "nesp-graph" || version != 1) fail_io(path, "not a graph file");
    NeighborGraph g;
    int directed = 0;
    f >> g.n >> g.k >> directed;
    if (!f) fail_io(path, "truncated header");
    g.directed = directed != 0;
    g.neighbors.assign(g.n, {});
    g.dist2.assign(g.n, {});
    std::size_t i, j;
    std::string tok;
    while (f >> i >> j >> tok) {
        if (i >= g.n || j >= g.n || i == j) fail_io(path, "edge endpoint out of range");
        const double d2 = parse_double(tok, path);
        g.neighbors[i].push_back(static_cast<std::uint32_t>(j));
        g.dist2[i].push_back(d2);
        if (!g.directed) {
            g.neighbors[j].push_back(static_cast<std::uint32_t>(i));
            g.dist2[j].push_back(d2);
        }
    }
    if (!f.eof()) fail_io(path, "malformed edge line");
    for (std::size_t p = 0; p < g.n; ++p) {
        // Restore index order.
        std::vector<std::size_t> perm(g.neighbors[p].size());
        for (std::size_t t = 0; t < perm.size(); ++t) perm[t] = t;
        std::sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
            return g.neighbors[p][a] < g.neighbors[p][b];
        });
        std::vector<std::uint32_t> nn(perm.size());
        std::vector<double> dd(perm.size());
        for (std::size_t t = 0; t < perm.size(); ++t) {
            nn[t] = g.neighbors[p][perm[t]];
            dd[t] = g.dist2[p][perm[t]];
        }
        g.neighbors[p] = std::move(nn);
        g.dist2[p] = std::move(dd);
    }
    return g;
}

void save_affinity(const std::string& path, const AffinityGraph& a) {
    std::ofstream f = open_out(path);
    const char* kind = a.kind == AffinityKind::GaussianPerplexity ? "gaussian" : "binary";
    f << "nesp-affinity 1\n" << a.n << ' ' << kind << ' ' << a.edges.size() << '\n';
    for (const AffinityEdge& e : a.edges)
        f << e.i << ' ' << e.j << ' ' << fmt17(e.v) << '\n';
    if (!a.sigmas.empty()) {
        f << "sigmas\n";
        for (std::size_t i = 0; i < a.n; ++i)
            f << fmt17(a.sigmas[i]) << ' ' << (a.flagged.empty() ? 0 : int(a.flagged[i]))
              << '\n';
    }
    if (!f) fail_io(path, "write failed");
}

AffinityGraph load_affinity(const std::string& path) {
    std::ifstream f = open_in(path);
    std::string magic, kind;
    int version = 0;
    std::size_t edge_count = 0;
    AffinityGraph a;
    f >> magic >> version >> a.n >> kind >> edge_count;
    if (!f || magic != "nesp-affinity" || version != 1) fail_io(path, "not an affinity file");
    if (kind == "gaussian")
        a.kind = AffinityKind::GaussianPerplexity;
    else if (kind == "binary")
        a.kind = AffinityKind::BinaryKnn;
    else
        fail_io(path, "unknown affinity kind");

    a.edges.reserve(edge_count);
    std::string tok;
    for (std::size_t t = 0; t < edge_count; ++t) {
        std::size_t i, j;
        if (!(f >> i >> j >> tok)) fail_io(path, "truncated edge list");
        if (i >= a.n || j >= a.n || i >= j) fail_io(path, "bad edge endpoints");
        AffinityEdge e;
        e.i = static_cast<std::uint32_t>(i);
        e.j = static_cast<std::uint32_t>(j);
        e.v = parse_double(tok, path);
        a.edges.push_back(e);
        a.total_mass += 2.0 * e.v;
    }
    if (f >> tok) {
        if (tok != "sigmas") fail_io(path, "unexpected trailer");
        a.sigmas.resize(a.n);
        a.flagged.resize(a.n);
        for (std::size_t i = 0; i < a.n; ++i) {
            int flag = 0;
            if (!(f >> tok >> flag)) fail_io(path, "truncated bandwidth section");
            a.sigmas[i] = parse_double(tok, path);
            a.flagged[i] = static_cast<std::uint8_t>(flag != 0);
        }
    }
    a.build_adjacency();
    return a;
}

nlohmann::json trace_to_json(const RunTrace& trace) {
    nlohmann::json records = nlohmann::json::array();
    for (const TraceRecord& r : trace.records) {
        records.push_back({{"iter", r.iter},
                           {"Z", nan_to_null(r.z)},
                           {"n_over_rhoZ", nan_to_null(r.n_over_rho_z)},
                           {"span_x", r.span_x},
                           {"span_y", r.span_y},
                           {"grad_norm", nan_to_null(r.grad_norm)}});
    }
    return {{"cadence", trace.cadence}, {"records", std::move(records)}};
}

RunTrace trace_from_json(const nlohmann::json& j) {
    RunTrace t;
    t.cadence = j.at("cadence").get<std::size_t>();
    for (const nlohmann::json& rj : j.at("records")) {
        TraceRecord r;
        r.iter = rj.at("iter").get<std::size_t>();
        r.z = null_to_nan(rj.at("Z"));
        r.n_over_rho_z = null_to_nan(rj.at("n_over_rhoZ"));
        r.span_x = rj.at("span_x").get<double>();
        r.span_y = rj.at("span_y").get<double>();
        r.grad_norm = null_to_nan(rj.at("grad_norm"));
        t.records.push_back(r);
    }
    return t;
}

void save_checkpoint(const std::string& stem, const RunResult& result) {
    save_raw_f32(result.embedding.as_matrix(), stem + ".f32");
    nlohmann::json j = trace_to_json(result.trace);
    j["engine"] = kEngineVersion;
    j["status"] = result.status == RunStatus::Completed ? "completed" : "diverged";
    j["iterations"] = result.iterations_run;
    write_json_file(stem + ".trace.json", j);
}

RunResult load_checkpoint(const std::string& stem) {
    RunResult r;
    r.embedding = Embedding::from_matrix(load_raw_f32(stem + ".f32"));
    const nlohmann::json j = read_json_file(stem + ".trace.json");
    r.status = j.at("status").get<std::string>() == "diverged" ? RunStatus::Diverged
                                                               : RunStatus::Completed;
    r.iterations_run = j.at("iterations").get<std::size_t>();
    r.trace = trace_from_json(j);
    return r;
}

void save_embedding_csv(const std::string& path, const Embedding& e) {
    save_csv(e.as_matrix(), path);
}

Embedding load_embedding_csv(const std::string& path) {
    return Embedding::from_matrix(load_csv(path));
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
    std::ofstream f = open_out(path);
    f << j.dump(2) << '\n';
    if (!f) fail_io(path, "write failed");
}

nlohmann::json read_json_file(const std::string& path) {
    std::ifstream f = open_in(path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::parse_error& e) {
        fail_io(path, e.what());
    }
    return j;
}

} // namespace nesp
