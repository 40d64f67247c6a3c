// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "circuits/fixtures.hpp"
#include "circuits/graph.hpp"
#include "test_util.hpp"

using namespace circuits;

namespace {

CausalEdge edge(int sl, int si, int tl, int ti, double d) {
  CausalEdge e;
  e.source = {0, sl, si};
  e.target = {0, tl, ti};
  e.d = d;
  e.consistency = 0.9;
  e.n = 20;
  e.sign = d < 0 ? EdgeSign::Inhibitory : EdgeSign::Excitatory;
  return e;
}

}  // namespace

TEST(Graph, UnionKeepsLargerMagnitude) {
  CircuitGraph g({edge(0, 1, 1, 2, 0.8), edge(0, 1, 1, 2, -1.5), edge(0, 1, 1, 3, 0.9)});
  ASSERT_EQ(g.size(), 2u);
  EXPECT_DOUBLE_EQ(g.edges()[0].d, -1.5);
  EXPECT_EQ(g.nodes().size(), 3u);
}

TEST(Graph, DegreesAndTopLists) {
  CircuitGraph g({edge(0, 1, 1, 2, 1), edge(0, 1, 1, 3, 1), edge(0, 1, 2, 3, 1), edge(0, 4, 1, 2, 1),
                  edge(1, 2, 2, 3, 1)});
  const auto s = degree_stats(g, 2);
  EXPECT_EQ(s.degrees.at({0, 0, 1}).out, 3);
  EXPECT_EQ(s.degrees.at({0, 1, 2}).in, 2);
  EXPECT_EQ(s.degrees.at({0, 1, 2}).out, 1);
  EXPECT_EQ(s.degrees.at({0, 2, 3}).in, 2);
  ASSERT_EQ(s.top_out.size(), 2u);
  EXPECT_EQ(s.top_out[0].first, (FeatureId{0, 0, 1}));
  EXPECT_EQ(s.top_out[0].second, 3);
  EXPECT_EQ(s.top_in[0].second, 2);
}

TEST(Graph, AttenuationCountsPerSource) {
  CircuitGraph g({edge(0, 1, 1, 2, 1), edge(0, 1, 1, 3, 1), edge(0, 1, 3, 3, 1), edge(0, 4, 1, 2, 1),
                  edge(1, 2, 2, 3, 1)});
  const auto explicit_curve = attenuation_curve(g, 0, 4, {1, 2, 3});
  ASSERT_EQ(explicit_curve.size(), 3u);
  EXPECT_DOUBLE_EQ(explicit_curve[0].mean_edges, 0.75);
  EXPECT_EQ(explicit_curve[1].edges, 0);
  EXPECT_DOUBLE_EQ(explicit_curve[2].mean_edges, 0.25);

  const auto implicit = attenuation_curve(g, 0);
  ASSERT_EQ(implicit.size(), 2u);
  EXPECT_EQ(implicit[0].target_layer, 1);
  EXPECT_DOUBLE_EQ(implicit[0].mean_edges, 1.5);
  EXPECT_EQ(implicit[1].target_layer, 3);
  EXPECT_DOUBLE_EQ(implicit[1].mean_edges, 0.5);
  EXPECT_THROW(attenuation_curve(g, 5), InsufficientDataError);
}

TEST(Graph, TargetCoveragePoolsIndicesAcrossLayers) {
  CircuitGraph g({edge(0, 1, 1, 2, 1), edge(0, 1, 2, 2, 1), edge(0, 1, 3, 7, 1)});
  EXPECT_DOUBLE_EQ(target_coverage(g, 8), 2.0 / 8.0);
}

TEST(EdgeCsv, RoundTripIsByteIdentical) {
  const auto dir = circuits::testing::scratch();
  std::vector<CausalEdge> edges{edge(0, 1, 1, 2, 0.1 + 0.2), edge(2, 9, 3, 1, -1.0 / 3.0),
                                edge(1, 0, 2, 0, INFINITY)};
  save_edges(dir / "a.csv", edges, {provenance_comment(7, 0xabc), "condition=x"});
  const auto back = load_edges(dir / "a.csv");
  EXPECT_EQ(back, edges);
  save_edges(dir / "b.csv", back, {provenance_comment(7, 0xabc), "condition=x"});
  EXPECT_EQ(circuits::testing::slurp(dir / "a.csv"), circuits::testing::slurp(dir / "b.csv"));
  EXPECT_EQ(provenance_comment(7, 0xabc), "seed=7,config_hash=0000000000000abc");
  EXPECT_EQ(load_edges(dir / "a.csv", 3).front().source.model, 3);
}

TEST(EdgeCsv, MissingColumnIsFormatError) {
  TextTable t{{}, {"source", "target"}, {{"L0_F1", "L1_F2"}}};
  EXPECT_THROW(edges_from_table(t), FormatError);
}

TEST(Pmi, BitsArithmetic) {
  EXPECT_NEAR(pmi_bits(10, 20, 10, 100), std::log2(5.0), 1e-12);
  EXPECT_NEAR(pmi_bits(1, 1, 1, 1), 0.0, 1e-12);
  EXPECT_NEAR(pmi_bits(5, 10, 10, 20), 0.0, 1e-12);
}

TEST(Pmi, GraphMatchesBruteForceCounts) {
  PlantedFixtureOptions o;
  o.n_cells = 12;
  o.seq_len = 24;
  const auto fx = make_planted_fixture(o);
  PmiOptions opt;
  opt.min_support = 3;
  opt.pmi_threshold = 1.0;
  const auto got = pmi_graph(fx.saes, fx.model, fx.batch, {{0, 1}}, opt);

  const int F = fx.saes.at(0).n_features();
  std::vector<std::int64_t> ci(static_cast<std::size_t>(F)), cj(static_cast<std::size_t>(F));
  std::map<std::pair<int, int>, std::int64_t> joint;
  std::int64_t total = 0;
  for (const auto& cell : fx.batch.cells) {
    const auto clean = forward_clean(fx.model, cell);
    for (int p = 0; p < clean[0].states.rows(); ++p) {
      if (cell.padding[static_cast<std::size_t>(p)]) continue;
      ++total;
      const auto a = encode(fx.saes.at(0), clean[0].states.row(p)).indices;
      const auto b = encode(fx.saes.at(1), clean[1].states.row(p)).indices;
      for (int i : a) ++ci[static_cast<std::size_t>(i)];
      for (int j : b) ++cj[static_cast<std::size_t>(j)];
      for (int i : a) {
        for (int j : b) ++joint[{i, j}];
      }
    }
  }
  std::set<std::pair<int, int>> expect;
  for (const auto& [ij, n] : joint) {
    if (n < opt.min_support) continue;
    const double v = std::log2(static_cast<double>(n) * total /
                               (static_cast<double>(ci[static_cast<std::size_t>(ij.first)]) * cj[static_cast<std::size_t>(ij.second)]));
    if (v > opt.pmi_threshold) expect.insert(ij);
  }
  std::set<std::pair<int, int>> found;
  for (const auto& e : got) {
    found.insert({e.source.index, e.target.index});
    EXPECT_EQ(e.joint_count, (joint[{e.source.index, e.target.index}]));
  }
  EXPECT_EQ(found, expect);
  EXPECT_FALSE(found.empty());
}

TEST(Pmi, InvalidOptionsAreConfigErrors) {
  const auto fx = make_planted_fixture();
  PmiOptions opt;
  opt.min_support = 0;
  EXPECT_THROW(pmi_graph(fx.saes, fx.model, fx.batch, {{0, 1}}, opt), ConfigError);
}

TEST(Pmi, TableRoundTrip) {
  std::vector<PmiEdge> edges{{{0, 0, 1}, {0, 1, 2}, 1.25, 7}, {{0, 1, 3}, {0, 2, 4}, 2.0 / 3.0, 11}};
  const auto back = pmi_from_table(pmi_to_table(edges, {"x"}));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].pmi, edges[1].pmi);
  EXPECT_EQ(back[1].joint_count, 11);
  EXPECT_EQ(back[0].target, (FeatureId{0, 1, 2}));
}

TEST(Overlap, FractionOfCausalTargets) {
  CircuitGraph causal({edge(0, 1, 1, 2, 1), edge(0, 3, 1, 4, 1), edge(0, 3, 1, 5, 1), edge(0, 3, 2, 9, 1)});
  std::vector<PmiEdge> pmi{{{0, 0, 7}, {0, 1, 2}, 2.0, 9}, {{0, 0, 8}, {0, 1, 4}, 2.0, 9}, {{0, 0, 8}, {0, 1, 6}, 2.0, 9}};
  EXPECT_NEAR(*target_overlap(causal, pmi, {0, 1}), 2.0 / 3.0, 1e-12);
  EXPECT_FALSE(target_overlap(causal, pmi, {1, 2}).has_value());
  const auto rows = overlap_table(causal, pmi, {{0, 1}, {0, 2}, {3, 4}});
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].pmi_targets, 3);
  EXPECT_EQ(rows[0].causal_targets, 3);
  EXPECT_DOUBLE_EQ(rows[1].overlap, 0.0);
}
