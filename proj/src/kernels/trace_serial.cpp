// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <chrono>
#include <cstring>

#include "kernels/trace_kernel.hpp"

namespace circuits::detail {

TraceProblem TraceProblem::build(const LayeredModel& model, const SaeSet& saes,
                                 const std::map<int, std::vector<int>>& sources) {
  TraceProblem p;
  p.model = &model;
  p.saes = &saes;
  std::vector<int> encoded;
  for (const auto& [layer, feats] : sources) {
    if (layer < 0 || layer >= model.n_layers()) throw ConfigError("source layer " + std::to_string(layer) + " out of range");
    auto it = saes.find(layer);
    if (it == saes.end()) throw ConfigError("no SAE at source layer " + std::to_string(layer));
    if (it->second.d_model() != model.d_model()) throw ConfigError("SAE at layer " + std::to_string(layer) + " has the wrong width");
    LayerPlan plan;
    plan.layer = layer;
    plan.sources = feats;
    for (int f : feats) {
      if (f < 0 || f >= it->second.n_features()) {
        throw ConfigError("source feature " + std::to_string(f) + " out of range at layer " + std::to_string(layer));
      }
    }
    std::size_t off = 0;
    plan.offsets.push_back(0);
    for (const auto& [tl, sae] : saes) {
      if (tl <= layer || tl >= model.n_layers()) continue;
      if (sae.d_model() != model.d_model()) throw ConfigError("SAE at layer " + std::to_string(tl) + " has the wrong width");
      plan.targets.push_back(tl);
      off += static_cast<std::size_t>(sae.n_features());
      plan.offsets.push_back(off);
      encoded.push_back(tl);
    }
    if (plan.targets.empty()) throw ConfigError("source layer " + std::to_string(layer) + " has no downstream SAE");
    encoded.push_back(layer);
    p.plans.push_back(std::move(plan));
  }
  std::sort(encoded.begin(), encoded.end());
  encoded.erase(std::unique(encoded.begin(), encoded.end()), encoded.end());
  p.encoded_layers = std::move(encoded);
  return p;
}

TraceState TraceState::empty_for(const TraceProblem& problem) {
  TraceState s;
  for (const auto& plan : problem.plans) {
    s.acc.emplace_back(plan.sources.size() * plan.block());
  }
  s.passes.assign(problem.plans.size(), 0);
  s.skipped_passes.assign(problem.plans.size(), 0);
  s.seconds.assign(problem.plans.size(), 0.0);
  return s;
}

void TraceState::merge(const TraceState& other) {
  for (std::size_t p = 0; p < acc.size(); ++p) {
    auto& mine = acc[p];
    const auto& theirs = other.acc[p];
    for (std::size_t i = 0; i < mine.size(); ++i) mine[i] = welford_merge(mine[i], theirs[i]);
    passes[p] += other.passes[p];
    skipped_passes[p] += other.skipped_passes[p];
    seconds[p] += other.seconds[p];
  }
  skipped_cells += other.skipped_cells;
}

namespace {

using Clock = std::chrono::steady_clock;

bool rows_equal(std::span<const float> a, std::span<const float> b) {
  return std::memcmp(a.data(), b.data(), a.size_bytes()) == 0;
}

// delta[f] += (za - zc)[f] over the union of both supports.
void add_code_difference(const SparseCode& za, const SparseCode& zc, double* delta) {
  std::size_t i = 0, j = 0;
  while (i < za.indices.size() || j < zc.indices.size()) {
    if (j == zc.indices.size() || (i < za.indices.size() && za.indices[i] < zc.indices[j])) {
      delta[za.indices[i]] += za.values[i];
      ++i;
    } else if (i == za.indices.size() || zc.indices[j] < za.indices[i]) {
      delta[zc.indices[j]] -= zc.values[j];
      ++j;
    } else {
      delta[za.indices[i]] += static_cast<double>(za.values[i]) - static_cast<double>(zc.values[j]);
      ++i;
      ++j;
    }
  }
}

}  // namespace

void trace_cell(const TraceProblem& problem, const Cell& cell, TraceState& state) {
  const auto& model = *problem.model;
  const auto& saes = *problem.saes;
  const auto t0 = Clock::now();

  std::vector<HiddenState> clean;
  try {
    clean = forward_clean(model, cell);
  } catch (const NumericError&) {
    ++state.skipped_cells;
    return;
  }

  std::vector<int> valid;
  for (std::size_t i = 0; i < cell.padding.size(); ++i) {
    if (!cell.padding[i]) valid.push_back(static_cast<int>(i));
  }
  if (valid.empty()) {
    ++state.skipped_cells;
    return;
  }
  const double inv_n = 1.0 / static_cast<double>(valid.size());

  // Clean codes, indexed [layer][position].
  std::vector<std::vector<SparseCode>> codes(static_cast<std::size_t>(model.n_layers()));
  for (int l : problem.encoded_layers) {
    const auto& sae = saes.at(l);
    auto& out = codes[static_cast<std::size_t>(l)];
    out.resize(cell.padding.size());
    for (int pos : valid) out[static_cast<std::size_t>(pos)] = encode(sae, clean[static_cast<std::size_t>(l)].states.row(pos));
  }
  const double clean_seconds = std::chrono::duration<double>(Clock::now() - t0).count() /
                               static_cast<double>(std::max<std::size_t>(problem.plans.size(), 1));

  std::vector<double> delta;
  for (std::size_t p = 0; p < problem.plans.size(); ++p) {
    const auto tp = Clock::now();
    const auto& plan = problem.plans[p];
    const auto& src_sae = saes.at(plan.layer);
    const auto& src_state = clean[static_cast<std::size_t>(plan.layer)];
    const auto& src_codes = codes[static_cast<std::size_t>(plan.layer)];
    const std::size_t block = plan.block();
    delta.assign(block, 0.0);
    ++state.passes[p];  // the shared clean pass

    for (std::size_t s = 0; s < plan.sources.size(); ++s) {
      const int f = plan.sources[s];
      std::fill(delta.begin(), delta.end(), 0.0);

      HiddenState abl{plan.layer, src_state.states};
      bool any = false;
      const auto col = src_sae.decoder_column(f);
      for (int pos : valid) {
        const float z = src_codes[static_cast<std::size_t>(pos)].value_of(f);
        if (z <= 0.0f) continue;
        any = true;
        auto row = abl.states.row(pos);
        for (std::size_t c = 0; c < row.size(); ++c) row[c] -= z * col[c];
      }

      if (any) {
        std::vector<HiddenState> down;
        try {
          down = forward_from(model, plan.layer, abl, cell.padding);
        } catch (const NumericError&) {
          ++state.skipped_passes[p];
          continue;
        }
        for (std::size_t t = 0; t < plan.targets.size(); ++t) {
          const int tl = plan.targets[t];
          const auto& sae = saes.at(tl);
          const auto& abl_states = down[static_cast<std::size_t>(tl - plan.layer - 1)].states;
          const auto& clean_states = clean[static_cast<std::size_t>(tl)].states;
          const auto& clean_codes = codes[static_cast<std::size_t>(tl)];
          double* out = delta.data() + plan.offsets[t];
          for (int pos : valid) {
            const auto ar = abl_states.row(pos);
            if (rows_equal(ar, clean_states.row(pos))) continue;
            add_code_difference(encode(sae, ar), clean_codes[static_cast<std::size_t>(pos)], out);
          }
        }
        for (auto& v : delta) v *= inv_n;
      }
      ++state.passes[p];

      EdgeAccumulator* acc = state.acc[p].data() + s * block;
      for (std::size_t j = 0; j < block; ++j) acc[j].push(delta[j]);
    }
    state.seconds[p] += clean_seconds + std::chrono::duration<double>(Clock::now() - tp).count();
  }
}

void trace_cells_serial(const TraceProblem& problem, std::span<const Cell* const> cells, TraceState& state) {
  for (const Cell* c : cells) trace_cell(problem, *c, state);
}

}  // namespace circuits::detail
