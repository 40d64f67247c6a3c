// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <set>

#include "circuits/graph.hpp"

namespace circuits {

double pmi_bits(std::int64_t joint, std::int64_t count_i, std::int64_t count_j, std::int64_t total) {
  const double n = static_cast<double>(total);
  return std::log2(static_cast<double>(joint) / n) - std::log2(static_cast<double>(count_i) / n) -
         std::log2(static_cast<double>(count_j) / n);
}

std::vector<PmiEdge> pmi_graph(const SaeSet& saes, const LayeredModel& model, const CellBatch& batch,
                               const std::vector<std::pair<int, int>>& layer_pairs, const PmiOptions& options) {
  if (options.min_support < 1) throw ConfigError("PMI min_support must be >= 1");
  std::set<int> layers;
  for (const auto& [a, b] : layer_pairs) {
    if (a >= b) throw ConfigError("PMI layer pair must go downstream");
    for (int l : {a, b}) {
      if (!saes.contains(l)) throw ConfigError("no SAE at layer " + std::to_string(l) + " for PMI");
      layers.insert(l);
    }
  }

  struct PairCounts {
    int fa = 0, fb = 0;
    std::vector<std::int64_t> joint;  // [fa x fb]
  };
  std::map<int, std::vector<std::int64_t>> marginal;
  for (int l : layers) marginal[l].assign(static_cast<std::size_t>(saes.at(l).n_features()), 0);
  std::vector<PairCounts> pairs;
  for (const auto& [a, b] : layer_pairs) {
    PairCounts pc;
    pc.fa = saes.at(a).n_features();
    pc.fb = saes.at(b).n_features();
    pc.joint.assign(static_cast<std::size_t>(pc.fa) * static_cast<std::size_t>(pc.fb), 0);
    pairs.push_back(std::move(pc));
  }

  std::int64_t total = 0;
  std::map<int, std::vector<int>> active;
  for (const auto& cell : batch.cells) {
    const auto states = forward_clean(model, cell);
    for (std::size_t pos = 0; pos < cell.padding.size(); ++pos) {
      if (cell.padding[pos]) continue;
      ++total;
      for (int l : layers) {
        const auto z = encode(saes.at(l), states[static_cast<std::size_t>(l)].states.row(static_cast<int>(pos)));
        active[l] = z.indices;
        for (int f : z.indices) ++marginal[l][static_cast<std::size_t>(f)];
      }
      for (std::size_t p = 0; p < layer_pairs.size(); ++p) {
        auto& pc = pairs[p];
        for (int i : active[layer_pairs[p].first]) {
          for (int j : active[layer_pairs[p].second]) {
            ++pc.joint[static_cast<std::size_t>(i) * static_cast<std::size_t>(pc.fb) + static_cast<std::size_t>(j)];
          }
        }
      }
    }
  }

  std::vector<PmiEdge> out;
  for (std::size_t p = 0; p < layer_pairs.size(); ++p) {
    const auto [a, b] = layer_pairs[p];
    const auto& pc = pairs[p];
    const auto& ma = marginal[a];
    const auto& mb = marginal[b];
    for (int i = 0; i < pc.fa; ++i) {
      if (ma[static_cast<std::size_t>(i)] == 0) continue;
      for (int j = 0; j < pc.fb; ++j) {
        if (mb[static_cast<std::size_t>(j)] == 0) continue;
        const auto joint = pc.joint[static_cast<std::size_t>(i) * static_cast<std::size_t>(pc.fb) + static_cast<std::size_t>(j)];
        if (joint < options.min_support) continue;
        const double v = pmi_bits(joint, ma[static_cast<std::size_t>(i)], mb[static_cast<std::size_t>(j)], total);
        if (v > options.pmi_threshold) out.push_back({{0, a, i}, {0, b, j}, v, joint});
      }
    }
  }
  return out;
}

TextTable pmi_to_table(const std::vector<PmiEdge>& edges, std::vector<std::string> comments) {
  TextTable t;
  t.comments = std::move(comments);
  t.header = {"source_layer", "source_feature", "target_layer", "target_feature", "pmi", "joint_count"};
  for (const auto& e : edges) {
    t.rows.push_back({std::to_string(e.source.layer), std::to_string(e.source.index), std::to_string(e.target.layer),
                      std::to_string(e.target.index), format_double(e.pmi), std::to_string(e.joint_count)});
  }
  return t;
}

std::vector<PmiEdge> pmi_from_table(const TextTable& t) {
  const auto sl = t.column("source_layer"), sf = t.column("source_feature"), tl = t.column("target_layer"),
             tf = t.column("target_feature"), cp = t.column("pmi"), cj = t.column("joint_count");
  std::vector<PmiEdge> out;
  for (const auto& r : t.rows) {
    out.push_back({{0, static_cast<int>(parse_int64(r[sl])), static_cast<int>(parse_int64(r[sf]))},
                   {0, static_cast<int>(parse_int64(r[tl])), static_cast<int>(parse_int64(r[tf]))},
                   parse_double(r[cp]), parse_int64(r[cj])});
  }
  return out;
}

namespace {

std::pair<std::set<int>, std::set<int>> targets_at(const CircuitGraph& causal, const std::vector<PmiEdge>& pmi,
                                                   std::pair<int, int> lp) {
  std::set<int> c, p;
  for (const auto& e : causal.edges()) {
    if (e.source.layer == lp.first && e.target.layer == lp.second) c.insert(e.target.index);
  }
  for (const auto& e : pmi) {
    if (e.source.layer == lp.first && e.target.layer == lp.second) p.insert(e.target.index);
  }
  return {std::move(c), std::move(p)};
}

}  // namespace

std::optional<double> target_overlap(const CircuitGraph& causal, const std::vector<PmiEdge>& pmi,
                                     std::pair<int, int> layer_pair) {
  const auto [c, p] = targets_at(causal, pmi, layer_pair);
  if (c.empty()) return std::nullopt;
  const auto hit = std::count_if(c.begin(), c.end(), [&](int t) { return p.contains(t); });
  return static_cast<double>(hit) / static_cast<double>(c.size());
}

std::vector<OverlapRow> overlap_table(const CircuitGraph& causal, const std::vector<PmiEdge>& pmi,
                                      const std::vector<std::pair<int, int>>& layer_pairs) {
  std::vector<OverlapRow> rows;
  for (const auto& lp : layer_pairs) {
    const auto [c, p] = targets_at(causal, pmi, lp);
    if (c.empty()) continue;
    const auto hit = std::count_if(c.begin(), c.end(), [&](int t) { return p.contains(t); });
    rows.push_back({lp.first, lp.second, static_cast<std::int64_t>(p.size()), static_cast<std::int64_t>(c.size()),
                    static_cast<double>(hit) / static_cast<double>(c.size())});
  }
  return rows;
}

}  // namespace circuits
