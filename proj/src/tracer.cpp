// SPDX-License-Identifier: Apache-2.0

#include "circuits/tracer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "kernels/trace_kernel.hpp"

namespace circuits {

void TraceConfig::validate() const {
  if (!(d_threshold > 0.0) || !std::isfinite(d_threshold)) throw ConfigError("d_threshold must be positive");
  if (!(consistency_threshold > 0.0) || consistency_threshold >= 1.0) {
    throw ConfigError("consistency_threshold must lie in (0, 1)");
  }
  if (checkpoint_every < 1) throw ConfigError("checkpoint_every must be >= 1");
  if (sources_per_layer < 0) throw ConfigError("sources_per_layer must be >= 0");
  if (threads < 0) throw ConfigError("threads must be >= 0");
  if (halt_after_cells < 0) throw ConfigError("halt_after_cells must be >= 0");
}

std::uint64_t TraceConfig::hash() const {
  Fingerprint fp;
  fp.add("trace-config");
  for (int l : source_layers) fp.add(std::int64_t{l});
  fp.add(std::int64_t{sources_per_layer})
      .add(std::int64_t{n_cells})
      .add(d_threshold)
      .add(consistency_threshold)
      .add(std::int64_t{checkpoint_every})
      .add(std::int64_t{deterministic ? 1 : 0});
  return fp.value();
}

const char* to_string(EdgeSign sign) { return sign == EdgeSign::Inhibitory ? "inhibitory" : "excitatory"; }

double source_score(const AnnotationCatalog& catalog, const FeatureId& feature) {
  double score = 0.0;
  for (const auto& a : catalog.annotations(feature)) {
    if (a.p_value < 0.05) score -= std::log10(a.p_value);
  }
  return score;
}

std::vector<FeatureId> select_sources(const AnnotationCatalog& catalog, int layer, int n, int model) {
  if (n < 0) throw ConfigError("source count must be >= 0");
  std::vector<std::pair<double, FeatureId>> scored;
  for (const auto& id : catalog.features_at_layer(layer)) {
    if (id.model == model && catalog.annotated(id)) scored.emplace_back(source_score(catalog, id), id);
  }
  std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    return a.first > b.first || (a.first == b.first && a.second.index < b.second.index);
  });
  std::vector<FeatureId> out;
  for (std::size_t i = 0; i < scored.size() && static_cast<int>(i) < n; ++i) out.push_back(scored[i].second);
  return out;
}

Ablation ablate_at_layer(const SaeDictionary& sae, const HiddenState& h, int feature,
                         std::span<const std::uint8_t> padding) {
  if (sae.layer() != h.layer) throw ContractError("ablate_at_layer: SAE layer differs from state layer");
  if (feature < 0 || feature >= sae.n_features()) throw ContractError("ablate_at_layer: feature out of range");
  if (static_cast<int>(padding.size()) != h.states.rows()) throw ContractError("ablate_at_layer: mask length mismatch");
  Ablation out{h, std::vector<std::uint8_t>(padding.size(), 0)};
  const auto col = sae.decoder_column(feature);
  for (int pos = 0; pos < h.states.rows(); ++pos) {
    if (padding[static_cast<std::size_t>(pos)]) continue;
    const float z = encode(sae, h.states.row(pos)).value_of(feature);
    if (z <= 0.0f) continue;
    out.was_active[static_cast<std::size_t>(pos)] = 1;
    auto row = out.state.states.row(pos);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] -= z * col[c];
  }
  return out;
}

namespace {

bool significant(const EdgeEffect& e, const TraceConfig& config) {
  return std::abs(e.d) > config.d_threshold && e.consistency > config.consistency_threshold;
}

void finalize_block(const FeatureId& source, const detail::LayerPlan& plan, const EdgeAccumulator* acc,
                    const TraceConfig& config, std::vector<CausalEdge>& out) {
  for (std::size_t t = 0; t < plan.targets.size(); ++t) {
    const int tl = plan.targets[t];
    for (std::size_t j = plan.offsets[t]; j < plan.offsets[t + 1]; ++j) {
      if (acc[j].n < 2) continue;
      const auto e = finalize(acc[j]);
      if (!significant(e, config)) continue;
      CausalEdge edge;
      edge.source = source;
      edge.target = FeatureId{source.model, tl, static_cast<int>(j - plan.offsets[t])};
      edge.d = e.d;
      edge.consistency = e.consistency;
      edge.n = e.n;
      edge.sign = e.d < 0.0 ? EdgeSign::Inhibitory : EdgeSign::Excitatory;
      out.push_back(edge);
    }
  }
}

}  // namespace

void sort_edges(std::vector<CausalEdge>& edges) {
  std::sort(edges.begin(), edges.end(), [](const CausalEdge& a, const CausalEdge& b) {
    return std::tie(a.source, a.target) < std::tie(b.source, b.target);
  });
}

SourceAccumulators trace_source_feature(const LayeredModel& model, const SaeSet& saes, const FeatureId& source,
                                        const CellBatch& batch) {
  const auto problem = detail::TraceProblem::build(model, saes, {{source.layer, {source.index}}});
  auto state = detail::TraceState::empty_for(problem);
  for (const auto& cell : batch.cells) detail::trace_cell(problem, cell, state);

  SourceAccumulators out;
  out.source = source;
  const auto& plan = problem.plans.front();
  for (std::size_t t = 0; t < plan.targets.size(); ++t) {
    out.by_layer[plan.targets[t]].assign(state.acc[0].begin() + static_cast<std::ptrdiff_t>(plan.offsets[t]),
                                         state.acc[0].begin() + static_cast<std::ptrdiff_t>(plan.offsets[t + 1]));
  }
  return out;
}

std::vector<CausalEdge> finalize_edges(const SourceAccumulators& acc, const TraceConfig& config) {
  std::vector<CausalEdge> out;
  for (const auto& [tl, arr] : acc.by_layer) {
    for (std::size_t j = 0; j < arr.size(); ++j) {
      if (arr[j].n < 2) continue;
      const auto e = finalize(arr[j]);
      if (!significant(e, config)) continue;
      out.push_back({acc.source, FeatureId{acc.source.model, tl, static_cast<int>(j)}, e.d, e.consistency, e.n,
                     e.d < 0.0 ? EdgeSign::Inhibitory : EdgeSign::Excitatory});
    }
  }
  return out;
}

TraceResult run_trace(const LayeredModel& model, const SaeSet& saes, const CellBatch& batch, const SourcePlan& sources,
                      const TraceConfig& config) {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  config.validate();

  std::vector<const Cell*> cells;
  for (const auto& c : batch.cells) cells.push_back(&c);
  if (config.deterministic) {
    std::stable_sort(cells.begin(), cells.end(), [](const Cell* a, const Cell* b) { return a->cell_id < b->cell_id; });
  }
  if (config.n_cells > 0) {
    if (static_cast<std::size_t>(config.n_cells) > cells.size()) {
      throw ConfigError("n_cells = " + std::to_string(config.n_cells) + " but the batch holds " +
                        std::to_string(cells.size()));
    }
    cells.resize(static_cast<std::size_t>(config.n_cells));
  }

  const auto problem = detail::TraceProblem::build(model, saes, sources);

  Fingerprint fp;
  fp.add(static_cast<std::int64_t>(config.hash())).add(static_cast<std::int64_t>(model.fingerprint()));
  for (const auto& [l, sae] : saes) fp.add(std::int64_t{l}).add(static_cast<std::int64_t>(sae.fingerprint()));
  fp.add(static_cast<std::int64_t>(batch.fingerprint()));
  for (const auto& [l, feats] : sources) {
    fp.add(std::int64_t{l});
    for (int f : feats) fp.add(std::int64_t{f});
  }
  const std::uint64_t hash = fp.value();

  TraceResult result;
  auto& report = result.report;
  report.config_hash = hash;
  report.cells_total = static_cast<std::int64_t>(cells.size());

  auto state = detail::TraceState::empty_for(problem);
  std::int64_t done = 0;
  if (config.resume) {
    if (config.checkpoint_path.empty()) throw ConfigError("resume requested without a checkpoint path");
    if (!std::filesystem::exists(config.checkpoint_path)) {
      throw ConfigError("no checkpoint to resume at " + config.checkpoint_path.string());
    }
    auto loaded = detail::load_checkpoint(config.checkpoint_path, hash, problem);
    if (loaded.cells_done > report.cells_total) throw ConfigError("checkpoint is ahead of the batch");
    done = loaded.cells_done;
    state = std::move(loaded.state);
    report.resumed = true;
  }

  const bool serial = config.deterministic || config.threads == 1;
  const auto total = static_cast<std::int64_t>(cells.size());
  while (done < total) {
    const std::int64_t end = std::min<std::int64_t>(total, done + config.checkpoint_every);
    const std::span<const Cell* const> chunk(cells.data() + done, static_cast<std::size_t>(end - done));
    if (serial) {
      detail::trace_cells_serial(problem, chunk, state);
    } else {
      detail::trace_cells_omp(problem, chunk, state, config.threads);
    }
    done = end;
    if (!config.checkpoint_path.empty()) detail::save_checkpoint(config.checkpoint_path, hash, done, problem, state);
    if (config.halt_after_cells > 0 && done >= config.halt_after_cells && done < total) {
      report.halted = true;
      break;
    }
  }
  report.cells_done = done;
  report.skipped_cells = state.skipped_cells;

  for (std::size_t p = 0; p < problem.plans.size(); ++p) {
    const auto& plan = problem.plans[p];
    LayerTraceReport lr;
    lr.layer = plan.layer;
    lr.n_sources = static_cast<int>(plan.sources.size());
    lr.downstream_layers = plan.targets;
    lr.cells = done - state.skipped_cells;
    lr.passes = state.passes[p];
    lr.skipped_passes = state.skipped_passes[p];
    lr.seconds = state.seconds[p];
    if (!report.halted) {
      std::int64_t lo = -1, hi = 0;
      for (std::size_t s = 0; s < plan.sources.size(); ++s) {
        const std::size_t before = result.edges.size();
        finalize_block(FeatureId{0, plan.layer, plan.sources[s]}, plan, state.acc[p].data() + s * plan.block(), config,
                       result.edges);
        const auto deg = static_cast<std::int64_t>(result.edges.size() - before);
        lr.edges += deg;
        lo = lo < 0 ? deg : std::min(lo, deg);
        hi = std::max(hi, deg);
      }
      lr.min_out_degree = std::max<std::int64_t>(lo, 0);
      lr.max_out_degree = hi;
    }
    report.layers.push_back(std::move(lr));
  }
  sort_edges(result.edges);
  report.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return result;
}

TraceResult run_trace(const LayeredModel& model, const SaeSet& saes, const AnnotationCatalog& catalog,
                      const CellBatch& batch, const TraceConfig& config, int model_id) {
  SourcePlan plan;
  std::vector<std::string> warnings;
  for (int layer : config.source_layers) {
    if (!catalog.covers_layer(layer)) throw ConfigError("catalog has no features at layer " + std::to_string(layer));
    auto chosen = select_sources(catalog, layer, config.sources_per_layer, model_id);
    if (static_cast<int>(chosen.size()) < config.sources_per_layer) {
      warnings.push_back("layer " + std::to_string(layer) + ": only " + std::to_string(chosen.size()) +
                         " annotated features, wanted " + std::to_string(config.sources_per_layer));
    }
    auto& feats = plan[layer];
    for (const auto& id : chosen) feats.push_back(id.index);
  }
  auto result = run_trace(model, saes, batch, plan, config);
  for (auto& e : result.edges) {
    e.source.model = model_id;
    e.target.model = model_id;
  }
  result.report.warnings = std::move(warnings);
  return result;
}

}  // namespace circuits
