// SPDX-License-Identifier: Apache-2.0

#include "circuits/graph.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace circuits {

CircuitGraph::CircuitGraph(const std::vector<CausalEdge>& edges, ConditionLabel label) : label_(std::move(label)) {
  for (const auto& e : edges) add(e);
}

void CircuitGraph::add(const CausalEdge& edge) {
  if (edge.source.layer >= edge.target.layer) throw ContractError("circuit edge must point downstream");
  auto [it, inserted] = index_.try_emplace({edge.source, edge.target}, edges_.size());
  if (inserted) {
    edges_.push_back(edge);
  } else if (std::abs(edge.d) > std::abs(edges_[it->second].d)) {
    edges_[it->second] = edge;
  }
}

std::vector<FeatureId> CircuitGraph::nodes() const {
  std::set<FeatureId> s;
  for (const auto& e : edges_) {
    s.insert(e.source);
    s.insert(e.target);
  }
  return {s.begin(), s.end()};
}

namespace {

std::vector<std::pair<FeatureId, int>> top_by(const std::map<FeatureId, NodeDegree>& deg, bool out, std::size_t n) {
  std::vector<std::pair<FeatureId, int>> v;
  for (const auto& [id, d] : deg) {
    const int k = out ? d.out : d.in;
    if (k > 0) v.emplace_back(id, k);
  }
  std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    if (a.first.index != b.first.index) return a.first.index < b.first.index;
    return a.first < b.first;
  });
  if (v.size() > n) v.resize(n);
  return v;
}

}  // namespace

DegreeStats degree_stats(const CircuitGraph& g, std::size_t top_n) {
  DegreeStats s;
  // Edges are unique per (source, target), so counts are distinct neighbours.
  for (const auto& e : g.edges()) {
    ++s.degrees[e.source].out;
    ++s.degrees[e.target].in;
  }
  s.top_out = top_by(s.degrees, true, top_n);
  s.top_in = top_by(s.degrees, false, top_n);
  return s;
}

std::vector<AttenuationPoint> attenuation_curve(const CircuitGraph& g, int source_layer, int n_sources,
                                                const std::vector<int>& target_layers) {
  if (n_sources < 1) throw ContractError("attenuation_curve needs at least one source");
  std::map<int, std::int64_t> counts;
  for (const auto& e : g.edges()) {
    if (e.source.layer == source_layer) ++counts[e.target.layer];
  }
  std::vector<AttenuationPoint> out;
  for (int tl : target_layers) {
    if (tl <= source_layer) continue;
    const auto c = counts.contains(tl) ? counts[tl] : 0;
    out.push_back({tl, static_cast<double>(c) / n_sources, c});
  }
  return out;
}

std::vector<AttenuationPoint> attenuation_curve(const CircuitGraph& g, int source_layer) {
  std::set<FeatureId> sources;
  std::set<int> layers;
  for (const auto& e : g.edges()) {
    if (e.source.layer != source_layer) continue;
    sources.insert(e.source);
    layers.insert(e.target.layer);
  }
  if (sources.empty()) throw InsufficientDataError("no edges from layer " + std::to_string(source_layer));
  return attenuation_curve(g, source_layer, static_cast<int>(sources.size()), {layers.begin(), layers.end()});
}

double target_coverage(const CircuitGraph& g, int features_per_layer) {
  if (features_per_layer < 1) throw ContractError("features_per_layer must be positive");
  std::set<int> idx;
  for (const auto& e : g.edges()) idx.insert(e.target.index);
  return static_cast<double>(idx.size()) / features_per_layer;
}

}  // namespace circuits
