// SPDX-License-Identifier: Apache-2.0

#include <fstream>

#include <gtest/gtest.h>

#include "circuits/fixtures.hpp"
#include "circuits/tracer.hpp"
#include "test_util.hpp"

using namespace circuits;

namespace {

struct Setup {
  PlantedFixture fx;
  SourcePlan plan;
};

const Setup& setup() {
  static const Setup s = [] {
    PlantedFixtureOptions o;
    o.n_cells = 30;
    o.seq_len = 32;
    Setup out{make_planted_fixture(o), {}};
    out.plan[0] = {0, 1, 2, 3, 4, 5};
    out.plan[1] = {6, 7, 8, 9};
    return out;
  }();
  return s;
}

TraceConfig config(const std::filesystem::path& ckpt) {
  TraceConfig c;
  c.n_cells = 0;
  c.checkpoint_every = 7;
  c.deterministic = true;
  c.checkpoint_path = ckpt;
  return c;
}

}  // namespace

TEST(Checkpoint, HaltThenResumeMatchesUninterruptedRun) {
  const auto& s = setup();
  const auto dir = circuits::testing::scratch();
  const auto full = run_trace(s.fx.model, s.fx.saes, s.fx.batch, s.plan, config(dir / "full.ckpt"));
  EXPECT_FALSE(full.report.halted);

  auto first = config(dir / "part.ckpt");
  first.halt_after_cells = 10;
  const auto halted = run_trace(s.fx.model, s.fx.saes, s.fx.batch, s.plan, first);
  EXPECT_TRUE(halted.report.halted);
  EXPECT_EQ(halted.report.cells_done, 14);
  EXPECT_TRUE(halted.edges.empty());

  auto second = config(dir / "part.ckpt");
  second.resume = true;
  const auto resumed = run_trace(s.fx.model, s.fx.saes, s.fx.batch, s.plan, second);
  EXPECT_TRUE(resumed.report.resumed);
  EXPECT_EQ(resumed.report.cells_done, 30);
  EXPECT_EQ(resumed.edges, full.edges);
  for (std::size_t i = 0; i < full.report.layers.size(); ++i) {
    EXPECT_EQ(resumed.report.layers[i].passes, full.report.layers[i].passes);
  }
}

TEST(Checkpoint, ResumeWithDifferentConfigIsRefused) {
  const auto& s = setup();
  const auto dir = circuits::testing::scratch();
  auto first = config(dir / "a.ckpt");
  first.halt_after_cells = 7;
  run_trace(s.fx.model, s.fx.saes, s.fx.batch, s.plan, first);

  auto second = config(dir / "a.ckpt");
  second.resume = true;
  second.d_threshold = 0.75;
  try {
    run_trace(s.fx.model, s.fx.saes, s.fx.batch, s.plan, second);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("refusing to resume"), std::string::npos);
  }

  auto other_sources = config(dir / "a.ckpt");
  other_sources.resume = true;
  SourcePlan plan = s.plan;
  plan[0].push_back(11);
  EXPECT_THROW(run_trace(s.fx.model, s.fx.saes, s.fx.batch, plan, other_sources), ConfigError);
}

TEST(Checkpoint, MissingOrCorruptFilesAreErrors) {
  const auto& s = setup();
  const auto dir = circuits::testing::scratch();
  auto c = config(dir / "none.ckpt");
  c.resume = true;
  EXPECT_THROW(run_trace(s.fx.model, s.fx.saes, s.fx.batch, s.plan, c), ConfigError);

  auto no_path = config({});
  no_path.resume = true;
  EXPECT_THROW(run_trace(s.fx.model, s.fx.saes, s.fx.batch, s.plan, no_path), ConfigError);

  std::ofstream(dir / "junk.ckpt") << "not a checkpoint\n";
  auto junk = config(dir / "junk.ckpt");
  junk.resume = true;
  EXPECT_THROW(run_trace(s.fx.model, s.fx.saes, s.fx.batch, s.plan, junk), FormatError);

  auto first = config(dir / "t.ckpt");
  first.halt_after_cells = 7;
  run_trace(s.fx.model, s.fx.saes, s.fx.batch, s.plan, first);
  const auto bytes = circuits::testing::slurp(dir / "t.ckpt");
  std::ofstream(dir / "t.ckpt", std::ios::binary | std::ios::trunc) << bytes.substr(0, bytes.size() - 5);
  auto truncated = config(dir / "t.ckpt");
  truncated.resume = true;
  EXPECT_THROW(run_trace(s.fx.model, s.fx.saes, s.fx.batch, s.plan, truncated), FormatError);
}
