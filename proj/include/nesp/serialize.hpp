#pragma once

#include <string>

#include "json.hpp"

#include "nesp/affinity.hpp"
#include "nesp/knn.hpp"
#include "nesp/optimizer.hpp"

namespace nesp {

// Text formats round-trip exactly: doubles are written with %.17g.

// "nesp-graph 1" header, one "i j dist2" line per directed arc, or per
// unordered pair for undirected graphs.
void save_neighbor_graph(const std::string& path, const NeighborGraph& g);
NeighborGraph load_neighbor_graph(const std::string& path);

// "nesp-affinity 1" header, one "i j v" line per unordered pair, then an
// optional per-point bandwidth section for calibrated graphs.
void save_affinity(const std::string& path, const AffinityGraph& a);
AffinityGraph load_affinity(const std::string& path);

nlohmann::json trace_to_json(const RunTrace& trace);
RunTrace trace_from_json(const nlohmann::json& j);

// Checkpoint = raw-f32 coordinates at <stem>.f32 plus <stem>.trace.json with
// status, iteration count and the full trace.
void save_checkpoint(const std::string& stem, const RunResult& result);
RunResult load_checkpoint(const std::string& stem);

// Layout-only helpers (CSV with x,y columns).
void save_embedding_csv(const std::string& path, const Embedding& e);
Embedding load_embedding_csv(const std::string& path);

void write_json_file(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json_file(const std::string& path);

} // namespace nesp
