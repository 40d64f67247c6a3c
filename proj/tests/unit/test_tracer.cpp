// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "circuits/fixtures.hpp"
#include "circuits/tracer.hpp"
#include "kernels/trace_kernel.hpp"

using namespace circuits;

namespace {

const PlantedFixture& fixture() {
  static const PlantedFixture fx = [] {
    PlantedFixtureOptions o;
    o.n_cells = 40;
    o.seq_len = 48;
    return make_planted_fixture(o);
  }();
  return fx;
}

TraceConfig base_config() {
  TraceConfig c;
  c.n_cells = 0;
  c.checkpoint_every = 16;
  return c;
}

EdgeAccumulator make_acc(std::int64_t n, double mean, double sd, std::int64_t pos) {
  EdgeAccumulator a;
  a.n = n;
  a.mean = mean;
  a.m2 = sd * sd * static_cast<double>(n - 1);
  a.pos = pos;
  a.neg = n - pos;
  return a;
}

}  // namespace

TEST(TraceConfig, ValidateRejectsBadValues) {
  auto c = base_config();
  EXPECT_NO_THROW(c.validate());
  for (auto mutate : std::vector<void (*)(TraceConfig&)>{
           [](TraceConfig& t) { t.d_threshold = 0.0; }, [](TraceConfig& t) { t.d_threshold = INFINITY; },
           [](TraceConfig& t) { t.consistency_threshold = 1.0; }, [](TraceConfig& t) { t.consistency_threshold = 0.0; },
           [](TraceConfig& t) { t.checkpoint_every = 0; }, [](TraceConfig& t) { t.sources_per_layer = -1; },
           [](TraceConfig& t) { t.threads = -2; }}) {
    auto bad = c;
    mutate(bad);
    EXPECT_THROW(bad.validate(), ConfigError);
  }
}

TEST(TraceConfig, HashIgnoresThreadsButNotThresholds) {
  auto a = base_config(), b = base_config(), c = base_config();
  b.threads = 4;
  b.checkpoint_path = "/tmp/x";
  c.d_threshold = 0.6;
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_NE(a.hash(), c.hash());
}

TEST(Ablation, RemovesFeatureOnlyWhereActive) {
  const auto& fx = fixture();
  const auto& sae = fx.saes.at(0);
  const auto& cell = fx.batch.cells.front();
  const auto clean = forward_clean(fx.model, cell);
  const auto& h = clean[0];
  const int f = encode(sae, h.states.row(0)).indices.front();
  const auto ab = ablate_at_layer(sae, h, f, cell.padding);
  int active = 0;
  for (int p = 0; p < h.states.rows(); ++p) {
    const auto before = h.states.row(p);
    const auto after = ab.state.states.row(p);
    const float z = encode(sae, before).value_of(f);
    if (cell.padding[static_cast<std::size_t>(p)] || z <= 0.0f) {
      EXPECT_FALSE(ab.was_active[static_cast<std::size_t>(p)]);
      EXPECT_TRUE(std::equal(before.begin(), before.end(), after.begin()));
      continue;
    }
    ++active;
    EXPECT_TRUE(ab.was_active[static_cast<std::size_t>(p)]);
    const auto col = sae.decoder_column(f);
    for (std::size_t c = 0; c < before.size(); ++c) EXPECT_FLOAT_EQ(after[c], before[c] - z * col[c]);
    EXPECT_EQ(encode(sae, after).value_of(f), 0.0f);
  }
  EXPECT_GT(active, 0);
}

TEST(Ablation, ContractChecks) {
  const auto& fx = fixture();
  const auto& cell = fx.batch.cells.front();
  const auto clean = forward_clean(fx.model, cell);
  EXPECT_THROW(ablate_at_layer(fx.saes.at(1), clean[0], 0, cell.padding), ContractError);
  EXPECT_THROW(ablate_at_layer(fx.saes.at(0), clean[0], 9999, cell.padding), ContractError);
  EXPECT_THROW(ablate_at_layer(fx.saes.at(0), clean[0], 0, std::vector<std::uint8_t>(3)), ContractError);
}

TEST(Finalize, ThresholdsAreStrict) {
  SourceAccumulators acc;
  acc.source = {0, 0, 1};
  auto& arr = acc.by_layer[1];
  arr.push_back(make_acc(10, 0.5, 1.0, 8));    // d == threshold: dropped
  arr.push_back(make_acc(10, 0.6, 1.0, 7));    // consistency == threshold: dropped
  arr.push_back(make_acc(10, 0.6, 1.0, 8));    // kept, excitatory
  arr.push_back(make_acc(10, -0.6, 1.0, 2));   // kept, inhibitory
  arr.push_back(make_acc(1, 5.0, 0.0, 1));     // too few cells
  auto c = base_config();
  c.d_threshold = 0.5;
  c.consistency_threshold = 0.7;
  const auto edges = finalize_edges(acc, c);
  ASSERT_EQ(edges.size(), 2u);
  EXPECT_EQ(edges[0].target, (FeatureId{0, 1, 2}));
  EXPECT_EQ(edges[0].sign, EdgeSign::Excitatory);
  EXPECT_EQ(edges[1].target, (FeatureId{0, 1, 3}));
  EXPECT_EQ(edges[1].sign, EdgeSign::Inhibitory);
  EXPECT_NEAR(edges[1].d, -0.6, 1e-12);
}

TEST(RunTrace, EmptyPlanGivesNoEdges) {
  const auto& fx = fixture();
  const auto r = run_trace(fx.model, fx.saes, fx.batch, SourcePlan{}, base_config());
  EXPECT_TRUE(r.edges.empty());
  EXPECT_TRUE(r.report.layers.empty());
  EXPECT_EQ(r.report.cells_done, 40);
}

TEST(RunTrace, MatchesSingleSourceReference) {
  const auto& fx = fixture();
  auto c = base_config();
  c.deterministic = true;
  SourcePlan plan{{0, {}}, {2, {}}};
  for (const auto& e : fx.spec.edges) {
    if (e.source.layer == 0 || e.source.layer == 2) plan[e.source.layer].push_back(e.source.index);
  }
  for (auto& [_, v] : plan) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  const auto r = run_trace(fx.model, fx.saes, fx.batch, plan, c);

  std::vector<CausalEdge> ref;
  for (const auto& [layer, feats] : plan) {
    for (int f : feats) {
      const auto acc = trace_source_feature(fx.model, fx.saes, {0, layer, f}, fx.batch);
      for (const auto& e : finalize_edges(acc, c)) ref.push_back(e);
    }
  }
  sort_edges(ref);
  ASSERT_EQ(r.edges.size(), ref.size());
  for (std::size_t i = 0; i < ref.size(); ++i) {
    EXPECT_EQ(r.edges[i].source, ref[i].source);
    EXPECT_EQ(r.edges[i].target, ref[i].target);
    EXPECT_NEAR(r.edges[i].d, ref[i].d, 1e-9 * (1.0 + std::abs(ref[i].d)));
  }

  for (const auto& lr : r.report.layers) {
    EXPECT_EQ(lr.passes, 40 * (lr.n_sources + 1));  // one clean pass per cell plus one per source
    EXPECT_EQ(lr.skipped_passes, 0);
    EXPECT_EQ(lr.downstream_layers.front(), lr.layer + 1);
  }

  std::set<std::pair<FeatureId, FeatureId>> found;
  for (const auto& e : r.edges) found.insert({e.source, e.target});
  for (const auto& e : fx.spec.edges) {
    if (plan.contains(e.source.layer)) EXPECT_TRUE(found.contains({e.source, e.target})) << e.source.str();
  }
}

TEST(RunTrace, ParallelMatchesSerial) {
  const auto& fx = fixture();
  SourcePlan plan{{0, {}}, {1, {}}};
  for (int i = 0; i < 12; ++i) {
    plan[0].push_back(i);
    plan[1].push_back(i);
  }
  auto serial = base_config();
  serial.threads = 1;
  auto omp = base_config();
  omp.threads = 3;
  const auto a = run_trace(fx.model, fx.saes, fx.batch, plan, serial);
  const auto b = run_trace(fx.model, fx.saes, fx.batch, plan, omp);
  ASSERT_EQ(a.edges.size(), b.edges.size());
  for (std::size_t i = 0; i < a.edges.size(); ++i) {
    EXPECT_EQ(a.edges[i].target, b.edges[i].target);
    EXPECT_EQ(a.edges[i].n, b.edges[i].n);
    EXPECT_NEAR(a.edges[i].d, b.edges[i].d, 1e-9 * (1.0 + std::abs(a.edges[i].d)));
  }
}

TEST(Kernels, OmpAccumulatorsMatchSerial) {
  const auto& fx = fixture();
  const auto problem = detail::TraceProblem::build(fx.model, fx.saes, {{0, {0, 1, 2, 3}}, {3, {4, 5}}});
  std::vector<const Cell*> cells;
  for (const auto& c : fx.batch.cells) cells.push_back(&c);
  auto s = detail::TraceState::empty_for(problem);
  auto p = detail::TraceState::empty_for(problem);
  detail::trace_cells_serial(problem, cells, s);
  detail::trace_cells_omp(problem, cells, p, 4);
  EXPECT_EQ(s.passes, p.passes);
  ASSERT_EQ(s.acc.size(), p.acc.size());
  for (std::size_t i = 0; i < s.acc.size(); ++i) {
    ASSERT_EQ(s.acc[i].size(), p.acc[i].size());
    for (std::size_t j = 0; j < s.acc[i].size(); ++j) {
      EXPECT_EQ(s.acc[i][j].n, p.acc[i][j].n);
      EXPECT_EQ(s.acc[i][j].pos, p.acc[i][j].pos);
      EXPECT_NEAR(s.acc[i][j].mean, p.acc[i][j].mean, 1e-12);
      EXPECT_NEAR(s.acc[i][j].m2, p.acc[i][j].m2, 1e-9 * (1.0 + s.acc[i][j].m2));
    }
  }
}

TEST(RunTrace, NCellsLargerThanBatchIsConfigError) {
  const auto& fx = fixture();
  auto c = base_config();
  c.n_cells = 41;
  EXPECT_THROW(run_trace(fx.model, fx.saes, fx.batch, SourcePlan{{0, {1}}}, c), ConfigError);
}

TEST(SelectSources, RanksByScoreThenIndexAndFiltersModel) {
  AnnotationCatalog cat;
  cat.add_annotation({0, 1, 4}, {Ontology::GoBp, "a", 1e-3});   // 3
  cat.add_annotation({0, 1, 2}, {Ontology::GoBp, "b", 1e-3});   // 3
  cat.add_annotation({0, 1, 9}, {Ontology::GoBp, "c", 1e-2});   // 2
  cat.add_annotation({0, 1, 9}, {Ontology::Kegg, "d", 1e-4});   // +4 = 6
  cat.add_annotation({0, 1, 7}, {Ontology::GoBp, "e", 0.2});    // 0
  cat.add_annotation({1, 1, 1}, {Ontology::GoBp, "f", 1e-12});  // other model
  cat.add_annotation({0, 2, 1}, {Ontology::GoBp, "g", 1e-12});  // other layer
  EXPECT_NEAR(source_score(cat, {0, 1, 9}), 6.0, 1e-12);
  EXPECT_EQ(source_score(cat, {0, 1, 7}), 0.0);
  const auto top = select_sources(cat, 1, 3);
  EXPECT_EQ(top, (std::vector<FeatureId>{{0, 1, 9}, {0, 1, 2}, {0, 1, 4}}));
  EXPECT_EQ(select_sources(cat, 1, 10).size(), 4u);
  EXPECT_EQ(select_sources(cat, 1, 10, 1), (std::vector<FeatureId>{{1, 1, 1}}));
  EXPECT_THROW(select_sources(cat, 1, -1), ConfigError);
}

TEST(RunTrace, CatalogOverloadTagsModelAndWarnsOnShortfall) {
  const auto& fx = fixture();
  AnnotationCatalog cat;
  cat.add_annotation({2, 0, 3}, {Ontology::GoBp, "x", 1e-4});
  auto c = base_config();
  c.source_layers = {0};
  c.sources_per_layer = 2;
  const auto r = run_trace(fx.model, fx.saes, cat, fx.batch, c, 2);
  ASSERT_EQ(r.report.warnings.size(), 1u);
  for (const auto& e : r.edges) {
    EXPECT_EQ(e.source, (FeatureId{2, 0, 3}));
    EXPECT_EQ(e.target.model, 2);
  }
  c.source_layers = {4};
  EXPECT_THROW(run_trace(fx.model, fx.saes, cat, fx.batch, c, 2), ConfigError);
}
