// SPDX-License-Identifier: Apache-2.0
//
// Causal circuit tracing: ablate one source feature, propagate, re-encode
// downstream and accumulate per-target activation deltas across cells.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "circuits/catalog.hpp"
#include "circuits/model.hpp"
#include "circuits/sae.hpp"
#include "circuits/stats.hpp"

namespace circuits {

struct TraceConfig {
  std::vector<int> source_layers;
  int sources_per_layer = 30;
  int n_cells = 200;  // <= 0 uses the whole batch
  double d_threshold = 0.5;
  double consistency_threshold = 0.7;
  int checkpoint_every = 50;
  bool deterministic = false;

  int threads = 0;                          // 0: OpenMP default
  std::filesystem::path checkpoint_path;    // empty: no checkpoints
  bool resume = false;
  int halt_after_cells = 0;                 // > 0: stop after the first checkpoint at or past this count

  /// Throws ConfigError on non-positive thresholds or checkpoint interval.
  void validate() const;
  /// Hash of the fields that shape the result (not threads or paths).
  std::uint64_t hash() const;
};

enum class EdgeSign { Inhibitory, Excitatory };

const char* to_string(EdgeSign sign);

struct CausalEdge {
  FeatureId source;
  FeatureId target;
  double d = 0.0;
  double consistency = 0.0;
  std::int64_t n = 0;
  EdgeSign sign = EdgeSign::Inhibitory;

  bool operator==(const CausalEdge&) const = default;
};

/// Score = sum of -log10(p) over enrichments with p < 0.05. Returns the top
/// n annotated features at `layer` (ties: lower index). Fewer annotated
/// features than n returns all of them. Only features of `model` count.
std::vector<FeatureId> select_sources(const AnnotationCatalog& catalog, int layer, int n, int model = 0);
double source_score(const AnnotationCatalog& catalog, const FeatureId& feature);

struct Ablation {
  HiddenState state;
  std::vector<std::uint8_t> was_active;  // per position
};

/// h - z_f * W_dec[:, f] at every non-padded position where feature f is
/// active in encode(h). Padded positions are left untouched.
Ablation ablate_at_layer(const SaeDictionary& sae, const HiddenState& h, int feature,
                         std::span<const std::uint8_t> padding);

/// Dense accumulators for one source feature: one [F] array per downstream
/// layer that has an SAE.
struct SourceAccumulators {
  FeatureId source;
  std::map<int, std::vector<EdgeAccumulator>> by_layer;
};

/// Traces a single source feature over the whole batch (serial, in batch
/// order).
SourceAccumulators trace_source_feature(const LayeredModel& model, const SaeSet& saes, const FeatureId& source,
                                        const CellBatch& batch);

/// Keeps targets with |d| > d_threshold and consistency > threshold.
std::vector<CausalEdge> finalize_edges(const SourceAccumulators& acc, const TraceConfig& config);
/// Sorted by (source, target).
void sort_edges(std::vector<CausalEdge>& edges);

struct LayerTraceReport {
  int layer = 0;
  int n_sources = 0;
  std::vector<int> downstream_layers;
  std::int64_t cells = 0;
  std::int64_t passes = 0;          // successful forward passes
  std::int64_t skipped_passes = 0;  // ablated passes that produced non-finite states
  double seconds = 0.0;
  std::int64_t edges = 0;
  std::int64_t min_out_degree = 0;
  std::int64_t max_out_degree = 0;
};

struct TraceReport {
  std::uint64_t config_hash = 0;
  std::int64_t cells_total = 0;
  std::int64_t cells_done = 0;
  std::int64_t skipped_cells = 0;  // clean pass non-finite
  bool halted = false;
  bool resumed = false;
  double seconds = 0.0;
  std::vector<LayerTraceReport> layers;
  std::vector<std::string> warnings;
};

struct TraceResult {
  std::vector<CausalEdge> edges;
  TraceReport report;
};

/// Explicit source lists per layer (feature indices).
using SourcePlan = std::map<int, std::vector<int>>;

TraceResult run_trace(const LayeredModel& model, const SaeSet& saes, const CellBatch& batch, const SourcePlan& sources,
                      const TraceConfig& config);
/// Selects sources_per_layer sources per configured layer from the catalog
/// entries of condition model `model_id`.
TraceResult run_trace(const LayeredModel& model, const SaeSet& saes, const AnnotationCatalog& catalog,
                      const CellBatch& batch, const TraceConfig& config, int model_id = 0);

}  // namespace circuits
