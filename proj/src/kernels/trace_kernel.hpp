// SPDX-License-Identifier: Apache-2.0
//
// Internal per-cell tracing kernel shared by the serial and OpenMP drivers.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <vector>

#include "circuits/model.hpp"
#include "circuits/sae.hpp"
#include "circuits/stats.hpp"

namespace circuits::detail {

struct LayerPlan {
  int layer = 0;
  std::vector<int> sources;
  std::vector<int> targets;          // downstream layers with an SAE
  std::vector<std::size_t> offsets;  // offsets[t] = start of target layer t inside one source block

  std::size_t block() const { return offsets.empty() ? 0 : offsets.back(); }
};

struct TraceProblem {
  const LayeredModel* model = nullptr;
  const SaeSet* saes = nullptr;
  std::vector<LayerPlan> plans;
  std::vector<int> encoded_layers;  // layers whose clean codes are needed

  static TraceProblem build(const LayeredModel& model, const SaeSet& saes, const std::map<int, std::vector<int>>& sources);
};

struct TraceState {
  std::vector<std::vector<EdgeAccumulator>> acc;  // per plan: [sources x block]
  std::vector<std::int64_t> passes;
  std::vector<std::int64_t> skipped_passes;
  std::vector<double> seconds;
  std::int64_t skipped_cells = 0;

  static TraceState empty_for(const TraceProblem& problem);
  /// Appends `other` as if its cells followed this state's cells.
  void merge(const TraceState& other);
};

/// Clean pass, per-source ablation and downstream measurement for one cell.
void trace_cell(const TraceProblem& problem, const Cell& cell, TraceState& state);

void trace_cells_serial(const TraceProblem& problem, std::span<const Cell* const> cells, TraceState& state);
void trace_cells_omp(const TraceProblem& problem, std::span<const Cell* const> cells, TraceState& state, int threads);

/// Atomic write: JSON header line, newline, raw accumulator blob.
void save_checkpoint(const std::filesystem::path& path, std::uint64_t hash, std::int64_t cells_done,
                     const TraceProblem& problem, const TraceState& state);

struct LoadedCheckpoint {
  std::int64_t cells_done = 0;
  TraceState state;
};

/// Throws ConfigError when the stored hash or layout does not match.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path, std::uint64_t hash, const TraceProblem& problem);

}  // namespace circuits::detail
