// SPDX-License-Identifier: Apache-2.0
//
// Circuit graphs built from significant edges, their degree and depth
// statistics, and the PMI co-activation graph used as a correlational
// baseline.

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "circuits/table_io.hpp"
#include "circuits/tracer.hpp"

namespace circuits {

// ---------------------------------------------------------------------------
// Edge CSV

/// "seed=<n>,config_hash=<hex>" header comment recorded in every artifact.
std::string provenance_comment(std::uint64_t seed, std::uint64_t config_hash);

TextTable edges_to_table(const std::vector<CausalEdge>& edges, std::vector<std::string> comments = {});
/// Edges of condition `model` (the CSV carries layer/index only).
std::vector<CausalEdge> edges_from_table(const TextTable& table, int model = 0);
void save_edges(const std::filesystem::path& path, const std::vector<CausalEdge>& edges,
                std::vector<std::string> comments = {});
std::vector<CausalEdge> load_edges(const std::filesystem::path& path, int model = 0);

// ---------------------------------------------------------------------------

struct ConditionLabel {
  std::string name;
  int model = 0;
  std::string sae_set;
  std::string cell_set;
};

class CircuitGraph {
 public:
  CircuitGraph() = default;
  explicit CircuitGraph(const std::vector<CausalEdge>& edges, ConditionLabel label = {});

  /// Union semantics: a duplicate (source, target) keeps the larger |d|.
  void add(const CausalEdge& edge);

  const std::vector<CausalEdge>& edges() const { return edges_; }
  std::size_t size() const { return edges_.size(); }
  bool empty() const { return edges_.empty(); }
  std::vector<FeatureId> nodes() const;
  const ConditionLabel& label() const { return label_; }

 private:
  ConditionLabel label_;
  std::vector<CausalEdge> edges_;
  std::map<std::pair<FeatureId, FeatureId>, std::size_t> index_;
};

struct NodeDegree {
  int in = 0;
  int out = 0;
};

struct DegreeStats {
  std::map<FeatureId, NodeDegree> degrees;
  std::vector<std::pair<FeatureId, int>> top_out;  // descending, ties by feature index
  std::vector<std::pair<FeatureId, int>> top_in;
};

DegreeStats degree_stats(const CircuitGraph& g, std::size_t top_n = 10);

struct AttenuationPoint {
  int target_layer = 0;
  double mean_edges = 0.0;  // edges into target_layer per source feature
  std::int64_t edges = 0;
};

/// value(l') = #edges(source_layer -> l') / n_sources over `target_layers`.
std::vector<AttenuationPoint> attenuation_curve(const CircuitGraph& g, int source_layer, int n_sources,
                                                const std::vector<int>& target_layers);
/// Uses the distinct sources at source_layer in g and every layer it
/// reaches. Throws InsufficientDataError when g has no edge from that layer.
std::vector<AttenuationPoint> attenuation_curve(const CircuitGraph& g, int source_layer);

/// |distinct target feature indices| / features_per_layer, with indices
/// pooled across layers.
double target_coverage(const CircuitGraph& g, int features_per_layer);

// ---------------------------------------------------------------------------
// PMI

struct PmiEdge {
  FeatureId source;
  FeatureId target;
  double pmi = 0.0;
  std::int64_t joint_count = 0;
};

struct PmiOptions {
  double pmi_threshold = 1.0;  // bits
  std::int64_t min_support = 5;
};

/// log2 P(i,j) - log2 P(i) - log2 P(j).
double pmi_bits(std::int64_t joint, std::int64_t count_i, std::int64_t count_j, std::int64_t total);

/// Co-activation over every non-padded position of every cell: a feature
/// is active when it is non-zero in its TopK code.
std::vector<PmiEdge> pmi_graph(const SaeSet& saes, const LayeredModel& model, const CellBatch& batch,
                               const std::vector<std::pair<int, int>>& layer_pairs, const PmiOptions& options = {});

TextTable pmi_to_table(const std::vector<PmiEdge>& edges, std::vector<std::string> comments = {});
std::vector<PmiEdge> pmi_from_table(const TextTable& table);

/// |causal targets ∩ PMI targets| / |causal targets| for one layer pair;
/// nullopt when there are no causal targets.
std::optional<double> target_overlap(const CircuitGraph& causal, const std::vector<PmiEdge>& pmi,
                                     std::pair<int, int> layer_pair);

struct OverlapRow {
  int source_layer = 0;
  int target_layer = 0;
  std::int64_t pmi_targets = 0;
  std::int64_t causal_targets = 0;
  double overlap = 0.0;
};

/// One row per layer pair that has causal targets.
std::vector<OverlapRow> overlap_table(const CircuitGraph& causal, const std::vector<PmiEdge>& pmi,
                                      const std::vector<std::pair<int, int>>& layer_pairs);

}  // namespace circuits
