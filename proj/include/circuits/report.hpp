// SPDX-License-Identifier: Apache-2.0
//
// Per-condition run summary: edge statistics recomputable from the edge
// CSV, plus the trace's pass counts and timings.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "circuits/catalog.hpp"
#include "circuits/table_io.hpp"
#include "circuits/tracer.hpp"

namespace circuits {

struct EdgeSummary {
  std::int64_t total_edges = 0;
  std::int64_t source_features = 0;
  std::int64_t target_features = 0;  // distinct indices pooled across layers
  std::optional<double> target_coverage;
  std::optional<double> mean_abs_d;
  std::optional<double> median_abs_d;
  std::optional<double> pct_abs_d_gt1;
  std::optional<double> pct_abs_d_gt2;
  std::optional<double> inhibitory_pct;
  std::int64_t annotated_edges = 0;
  std::optional<double> coherence_pct;  // absent without a catalog or annotated edges
};

/// `features_per_layer` <= 0 leaves coverage absent.
EdgeSummary summarize_edges(const std::vector<CausalEdge>& edges, int features_per_layer,
                            const AnnotationCatalog* catalog = nullptr);

struct RunReport {
  std::string condition;
  std::string label;  // e.g. "K562/K562"
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  EdgeSummary summary;
  std::optional<TraceReport> trace;
};

nlohmann::json to_json(const EdgeSummary& s);
nlohmann::json to_json(const TraceReport& r);
TraceReport trace_report_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunReport& r);

/// One column per condition, one row per metric; absent values are empty.
TextTable table1(const std::vector<RunReport>& reports);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace circuits
