// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstring>
#include <set>

#include <gtest/gtest.h>

#include "circuits/fixtures.hpp"
#include "circuits/model.hpp"
#include "test_util.hpp"

using namespace circuits;

namespace {

bool bit_equal(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data().data(), b.data().data(), a.data().size() * sizeof(float)) == 0;
}

}  // namespace

TEST(Cells, GenerationIsSeededAndValid) {
  const auto a = generate_cells(3, 20, 32, 64, CellKind::K562Like);
  const auto b = generate_cells(3, 20, 32, 64, CellKind::K562Like);
  const auto c = generate_cells(4, 20, 32, 64, CellKind::K562Like);
  EXPECT_NO_THROW(a.validate());
  EXPECT_EQ(a.fingerprint(), b.fingerprint());
  EXPECT_NE(a.fingerprint(), c.fingerprint());
  for (const auto& cell : a.cells) {
    EXPECT_EQ(cell.tokens.size(), 32u);
    EXPECT_GT(cell.valid_positions(), 0);
    for (std::size_t i = 0; i < cell.tokens.size(); ++i) {
      if (cell.padding[i]) EXPECT_EQ(cell.tokens[i], kPadToken);
    }
  }
}

TEST(Cells, InvalidArgumentsAreConfigErrors) {
  EXPECT_THROW(generate_cells(1, 0, 8, 16, CellKind::K562Like), ConfigError);
  EXPECT_THROW(generate_cells(1, 4, 0, 16, CellKind::K562Like), ConfigError);
  EXPECT_THROW(generate_cells(1, 4, 8, 1, CellKind::K562Like), ConfigError);
}

TEST(Cells, SaveLoadRoundTrip) {
  const auto dir = circuits::testing::scratch();
  const auto a = generate_cells(9, 5, 16, 32, CellKind::MultiTissueLike);
  a.save(dir / "cells.json");
  EXPECT_EQ(CellBatch::load(dir / "cells.json").fingerprint(), a.fingerprint());
}

TEST(ToyTransformer, ReplayFromEveryLayerIsBitExact) {
  const auto model = build_toy_transformer(11, 4, 16, 2, 64, 64);
  const auto batch = generate_cells(11, 5, 24, 64, CellKind::K562Like);
  for (const auto& cell : batch.cells) {
    const auto clean = forward_clean(model, cell);
    ASSERT_EQ(static_cast<int>(clean.size()), model.n_layers());
    for (int l = 0; l < model.n_layers(); ++l) {
      for (const auto& h : forward_from(model, l, clean[static_cast<std::size_t>(l)], cell.padding)) {
        EXPECT_TRUE(bit_equal(h.states, clean[static_cast<std::size_t>(h.layer)].states)) << "from " << l << " at " << h.layer;
      }
    }
  }
}

TEST(ToyTransformer, PaddedPositionsDoNotInfluenceValidOnes) {
  const auto model = build_toy_transformer(2, 3, 16, 2, 64, 64);
  auto batch = generate_cells(2, 1, 24, 64, CellKind::K562Like);
  auto cell = batch.cells.front();
  const auto before = forward_clean(model, cell);
  for (std::size_t i = 0; i < cell.tokens.size(); ++i) {
    if (cell.padding[i]) cell.values[i] = 123.0f;
  }
  const auto after = forward_clean(model, cell);
  for (int l = 0; l < model.n_layers(); ++l) {
    for (int p = 0; p < before[0].states.rows(); ++p) {
      if (cell.padding[static_cast<std::size_t>(p)]) continue;
      const auto a = before[static_cast<std::size_t>(l)].states.row(p);
      const auto b = after[static_cast<std::size_t>(l)].states.row(p);
      EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin()));
    }
  }
}

TEST(ToyTransformer, InvalidDimensionsAreConfigErrors) {
  EXPECT_THROW(build_toy_transformer(1, 1, 16, 2), ConfigError);
  EXPECT_THROW(build_toy_transformer(1, 3, 15, 2), ConfigError);
}

TEST(ToyTransformer, SaveLoadPreservesFingerprint) {
  const auto dir = circuits::testing::scratch();
  const auto m = build_toy_transformer(5, 3, 16, 4, 64, 64);
  m.save(dir / "model.json");
  EXPECT_EQ(LayeredModel::load(dir / "model.json").fingerprint(), m.fingerprint());
}

TEST(PlantedSpec, StructureMatchesContract) {
  PlantedFixtureOptions o;
  const auto spec = make_planted_spec(o);
  ASSERT_EQ(spec.edges.size(), 50u);
  std::map<std::pair<int, int>, int> out_degree;
  std::map<int, int> source_transition;
  for (const auto& e : spec.edges) {
    EXPECT_EQ(e.target.layer, e.source.layer + 1);
    EXPECT_GE(e.weight, o.min_weight);
    EXPECT_LE(e.weight, o.max_weight);
    ++out_degree[{e.source.layer, e.source.index}];
    auto [it, added] = source_transition.emplace(e.source.index, e.source.layer);
    EXPECT_EQ(it->second, e.source.layer) << "source direction reused at another transition";
  }
  for (const auto& [_, d] : out_degree) EXPECT_EQ(d, 2);
  for (const auto& e : spec.edges) {
    auto it = source_transition.find(e.target.index);
    if (it != source_transition.end()) EXPECT_LT(it->second, e.target.layer) << "target becomes a later source";
  }
}

TEST(PlantedSpec, OddEdgeCountIsConfigError) {
  PlantedFixtureOptions o;
  o.n_edges = 7;
  EXPECT_THROW(make_planted_spec(o), ConfigError);
}

TEST(PlantedModel, ForwardMatchesDenseLayerMapOracle) {
  PlantedFixtureOptions o;
  o.n_cells = 4;
  const auto fx = make_planted_fixture(o);
  const int d = fx.model.d_model();
  for (const auto& cell : fx.batch.cells) {
    const auto clean = forward_clean(fx.model, cell);
    for (int l = 1; l < fx.model.n_layers(); ++l) {
      const auto m = planted_layer_map(fx.model, 0, l);
      for (int p = 0; p < clean[0].states.rows(); ++p) {
        const auto h0 = clean[0].states.row(p);
        const auto hl = clean[static_cast<std::size_t>(l)].states.row(p);
        for (int r = 0; r < d; ++r) {
          double expect = 0.0;
          for (int c = 0; c < d; ++c) expect += m[static_cast<std::size_t>(r * d + c)] * h0[static_cast<std::size_t>(c)];
          EXPECT_NEAR(hl[static_cast<std::size_t>(r)], expect, 1e-4 * (1.0 + std::abs(expect)));
        }
      }
    }
  }
}

TEST(PlantedModel, InfluenceIsWeightOnPlantedEdgesAndZeroOnUnrelatedPairs) {
  const auto fx = make_planted_fixture();
  std::set<std::pair<FeatureId, FeatureId>> planted;
  for (const auto& e : fx.spec.edges) {
    EXPECT_NEAR(planted_influence(fx.model, e.source, e.target), e.weight, 1e-6);
    planted.insert({e.source, e.target});
  }
  int zero = 0;
  for (int s = 0; s < 32; ++s) {
    for (int t = 0; t < 32; ++t) {
      if (s == t || planted.contains({FeatureId{0, 0, s}, FeatureId{0, 1, t}})) continue;
      if (planted_influence(fx.model, {0, 0, s}, {0, 1, t}) == 0.0) ++zero;
    }
  }
  EXPECT_EQ(zero, 32 * 31 - 10);
  EXPECT_DOUBLE_EQ(planted_influence(fx.model, {0, 0, 5}, {0, 3, 5}), 1.0);
}

TEST(PlantedModel, SaveLoadPreservesFingerprintAndSpec) {
  const auto dir = circuits::testing::scratch();
  const auto fx = make_planted_fixture();
  fx.model.save(dir / "model.json");
  const auto back = LayeredModel::load(dir / "model.json");
  EXPECT_EQ(back.fingerprint(), fx.model.fingerprint());
  ASSERT_NE(back.planted(), nullptr);
  EXPECT_EQ(back.planted()->spec.edges.size(), fx.spec.edges.size());
}

TEST(PlantedModel, NonFiniteStateIsNumericError) {
  const auto fx = make_planted_fixture();
  auto cell = fx.batch.cells.front();
  auto clean = forward_clean(fx.model, cell);
  auto h = clean[0];
  h.states(0, 0) = NAN;
  EXPECT_THROW(forward_from(fx.model, 0, h, cell.padding), NumericError);
}
