// SPDX-License-Identifier: Apache-2.0
//
// Run configuration: a flat `key = value` file. Numeric keys carry their
// unit in the name (`_count`, `_sd`, `_fraction`, `_bits`, `_cells`,
// `_log2`). Relative paths resolve against the config file's directory.
//
//   seed = 7
//   annotations = annotations.tsv
//   trace.source_layers = 0, 2, 4
//   trace.d_threshold_sd = 0.5
//   condition.A.label = K562/K562
//   condition.A.model = A/model.json
//   condition.A.saes = A/sae_L0.json, A/sae_L1.json

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "circuits/graph.hpp"
#include "circuits/tracer.hpp"

namespace circuits {

struct ConditionConfig {
  std::string name;
  std::string label;  // "<model cells>/<SAE cells>", e.g. K562/K562
  int model_id = 0;
  std::string group;  // model family for consensus
  std::filesystem::path model;
  std::filesystem::path cells;
  std::vector<std::filesystem::path> saes;
};

struct RunConfig {
  std::uint64_t seed = 7;
  std::filesystem::path base_dir;
  std::filesystem::path output_dir;  // defaults to base_dir

  std::filesystem::path annotations;
  std::filesystem::path gene_lists;
  std::filesystem::path domain_genes;
  std::filesystem::path perturbation;
  std::filesystem::path tissue_keywords;
  std::filesystem::path disease_keywords;
  std::string tissue_reference;  // condition the others are compared against

  TraceConfig trace;
  PmiOptions pmi;
  double lfc_threshold = 0.5;
  std::size_t top_genes = 10;
  int consensus_permutations = 1000;

  std::vector<ConditionConfig> conditions;

  /// Throws ConfigError for unknown names.
  const ConditionConfig& condition(const std::string& name) const;
  /// Thresholds, condition fields and existence of every referenced file.
  void validate() const;
  /// Hash of everything that shapes analysis results.
  std::uint64_t hash() const;
};

/// Throws ConfigError on unknown or repeated keys and malformed values.
RunConfig parse_run_config(std::istream& is, const std::filesystem::path& base_dir, const std::string& origin = "<stream>");
RunConfig load_run_config(const std::filesystem::path& path);
/// Writes paths relative to base_dir where possible.
void save_run_config(const std::filesystem::path& path, const RunConfig& config);

/// CIRCUITS_OUT_DIR when set, else config.output_dir, else base_dir.
std::filesystem::path resolve_output_dir(const RunConfig& config);

}  // namespace circuits
