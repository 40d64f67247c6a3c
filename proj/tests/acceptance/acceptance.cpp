// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: one PASS/FAIL line per criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "circuits/cli.hpp"
#include "circuits/fixtures.hpp"
#include "circuits/graph.hpp"
#include "circuits/knowledge.hpp"
#include "circuits/report.hpp"
#include "circuits/stats.hpp"
#include "circuits/tracer.hpp"
#include "circuits/validate.hpp"

namespace fs = std::filesystem;
using namespace circuits;
using Clock = std::chrono::steady_clock;
using boost::multiprecision::cpp_int;
using boost::multiprecision::cpp_rational;

namespace {

int failures = 0;

void report(int id, bool ok, const std::string& detail) {
  std::cout << (ok ? "PASS" : "FAIL") << " criterion " << id << ": " << detail << std::endl;
  if (!ok) ++failures;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

fs::path scratch_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("circuits_acceptance_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

bool bit_equal(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data().data(), b.data().data(), a.data().size() * sizeof(float)) == 0;
}

// ---------------------------------------------------------------------------

void criterion1() {
  const auto t0 = Clock::now();
  const auto model = build_toy_transformer(7, 6, 32, 4, 256, 256);
  const auto batch = generate_cells(7, 50, 64, 256, CellKind::K562Like);
  std::int64_t compared = 0, mismatched = 0;
  for (const auto& cell : batch.cells) {
    const auto clean = forward_clean(model, cell);
    for (int l = 0; l < model.n_layers(); ++l) {
      const auto replay = forward_from(model, l, clean[static_cast<std::size_t>(l)], cell.padding);
      for (const auto& h : replay) {
        ++compared;
        if (!bit_equal(h.states, clean[static_cast<std::size_t>(h.layer)].states)) ++mismatched;
      }
    }
  }
  const double secs = seconds_since(t0);
  report(1, mismatched == 0 && compared > 0 && secs < 10.0,
         std::to_string(compared) + " replayed layer states, " + std::to_string(mismatched) + " mismatched, " +
             fmt(secs) + " s");
}

struct PlantedRun {
  PlantedFixture fx;
  TraceResult result;
  double seconds = 0.0;
};

PlantedRun planted_run() {
  const auto t0 = Clock::now();
  PlantedRun run{make_planted_fixture(), {}, 0.0};
  TraceConfig cfg;
  cfg.source_layers = {0, 1, 2, 3, 4};
  cfg.n_cells = 200;
  SourcePlan plan;
  std::vector<int> all(static_cast<std::size_t>(run.fx.options.d_model));
  std::iota(all.begin(), all.end(), 0);
  for (int l : cfg.source_layers) plan[l] = all;
  run.result = run_trace(run.fx.model, run.fx.saes, run.fx.batch, plan, cfg);
  run.seconds = seconds_since(t0);
  return run;
}

void criterion2(const PlantedRun& run) {
  std::set<std::pair<FeatureId, FeatureId>> found;
  std::int64_t false_edges = 0;
  for (const auto& e : run.result.edges) {
    found.insert({e.source, e.target});
    if (planted_influence(run.fx.model, e.source, e.target) == 0.0) ++false_edges;
  }
  std::int64_t recovered = 0, recovered_inhibitory = 0;
  for (const auto& p : run.fx.spec.edges) {
    auto it = std::find_if(run.result.edges.begin(), run.result.edges.end(),
                           [&](const CausalEdge& e) { return e.source == p.source && e.target == p.target; });
    if (it == run.result.edges.end()) continue;
    ++recovered;
    if (it->d < 0.0) ++recovered_inhibitory;
  }
  std::int64_t tested = 0;
  for (const auto& l : run.result.report.layers) {
    tested += static_cast<std::int64_t>(l.n_sources) * static_cast<std::int64_t>(l.downstream_layers.size()) *
              run.fx.options.n_features;
  }
  const double recall = static_cast<double>(recovered) / static_cast<double>(run.fx.spec.edges.size());
  const double false_rate = static_cast<double>(false_edges) / static_cast<double>(tested);
  const bool ok = recall >= 0.90 && recovered_inhibitory == recovered && false_rate < 0.01 && run.seconds < 120.0;
  report(2, ok,
         "recall " + fmt(recall) + " (" + std::to_string(recovered) + "/" + std::to_string(run.fx.spec.edges.size()) +
             "), inhibitory " + std::to_string(recovered_inhibitory) + "/" + std::to_string(recovered) +
             ", false edges " + std::to_string(false_edges) + "/" + std::to_string(tested) + " tested pairs (" +
             fmt(100.0 * false_rate) + "%), " + fmt(run.seconds) + " s");
}

// ---------------------------------------------------------------------------

bool rel_close(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)}); }

void criterion3() {
  Rng rng(3);
  int bad = 0;
  double worst = 0.0;
  for (int s = 0; s < 1000; ++s) {
    const int n = 2 + static_cast<int>(rng.below(400));
    const double loc = rng.uniform(-1e3, 1e3);
    const double scale = std::pow(10.0, rng.uniform(-3.0, 3.0));
    std::vector<double> xs(static_cast<std::size_t>(n));
    for (auto& x : xs) x = loc + scale * rng.normal();

    long double sum = 0.0L;
    for (double x : xs) sum += x;
    const long double mean = sum / n;
    long double ss = 0.0L;
    for (double x : xs) ss += (x - mean) * (x - mean);
    const double var = static_cast<double>(ss / (n - 1));

    EdgeAccumulator acc;
    for (double x : xs) acc.push(x);
    const std::size_t cut = rng.below(xs.size() + 1);
    EdgeAccumulator left, right;
    for (std::size_t i = 0; i < xs.size(); ++i) (i < cut ? left : right).push(xs[i]);
    const auto merged = welford_merge(left, right);

    for (const auto& a : {acc, merged}) {
      const double em = std::abs(a.mean - static_cast<double>(mean)) / std::max(std::abs(static_cast<double>(mean)), scale);
      const double ev = std::abs(a.m2 / (n - 1) - var) / var;
      worst = std::max({worst, em, ev});
      if (em > 1e-9 || ev > 1e-9 || a.n != n) ++bad;
    }
  }
  EdgeAccumulator ex;
  for (double x : {2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0}) ex.push(x);
  const bool example = rel_close(ex.mean, 5.0, 1e-12) && rel_close(ex.m2 / 7.0, 32.0 / 7.0, 1e-12);
  report(3, bad == 0 && example,
         "1000 streams (sequential and merged), worst relative error " + fmt(worst) + ", worked example " +
             (example ? "mean 5 / variance 32/7" : "WRONG"));
}

// ---------------------------------------------------------------------------

cpp_int binom(int n, int k) {
  if (k < 0 || k > n) return 0;
  cpp_int r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

double to_double(const cpp_rational& q) { return q.convert_to<double>(); }

bool fisher_oracle(std::int64_t& tables, double& worst) {
  bool ok = true;
  for (int r1 = 0; r1 <= 30; ++r1) {
    for (int r2 = 0; r2 <= 30; ++r2) {
      const int n = r1 + r2;
      for (int c1 = std::max(0, n - 30); c1 <= std::min(30, n); ++c1) {
        const int lo = std::max(0, c1 - r2), hi = std::min(r1, c1);
        std::vector<cpp_int> w;
        cpp_int total = 0;
        for (int x = lo; x <= hi; ++x) {
          w.push_back(binom(r1, x) * binom(r2, c1 - x));
          total += w.back();
        }
        for (int a = lo; a <= hi; ++a) {
          cpp_int tail = 0;
          for (const auto& wx : w) {
            if (wx <= w[static_cast<std::size_t>(a - lo)]) tail += wx;
          }
          const double expect = (r1 == 0 || r2 == 0 || c1 == 0 || c1 == n) ? 1.0 : to_double(cpp_rational(tail, total));
          const Table2x2 t{{{a, r1 - a}, {c1 - a, r2 - c1 + a}}};
          const double got = fisher_exact(t).p_value;
          const double err = std::abs(got - expect) / expect;
          worst = std::max(worst, err);
          if (err > 1e-12) ok = false;
          ++tables;
        }
      }
    }
  }
  return ok;
}

bool mann_whitney_oracle(std::int64_t& configs, double& worst) {
  bool ok = true;
  for (int n = 2; n <= 12; ++n) {
    for (int nx = 1; nx < n; ++nx) {
      const int ny = n - nx;
      // Null distribution of U over every labeling of ranks 1..n.
      std::vector<std::int64_t> count(static_cast<std::size_t>(nx * ny + 1), 0);
      std::vector<std::vector<int>> labelings;
      for (unsigned mask = 0; mask < (1u << n); ++mask) {
        if (__builtin_popcount(mask) != nx) continue;
        int u = 0;
        for (int i = 0; i < n; ++i) {
          if (!(mask >> i & 1u)) continue;
          for (int j = 0; j < n; ++j) {
            if (!(mask >> j & 1u) && i > j) ++u;
          }
        }
        ++count[static_cast<std::size_t>(u)];
        labelings.push_back({static_cast<int>(mask), u});
      }
      const auto total = static_cast<std::int64_t>(labelings.size());
      for (const auto& lab : labelings) {
        const unsigned mask = static_cast<unsigned>(lab[0]);
        const int u = lab[1];
        std::int64_t le = 0, ge = 0;
        for (int v = 0; v <= nx * ny; ++v) {
          if (v <= u) le += count[static_cast<std::size_t>(v)];
          if (v >= u) ge += count[static_cast<std::size_t>(v)];
        }
        const double expect = std::min(1.0, 2.0 * static_cast<double>(std::min(le, ge)) / static_cast<double>(total));
        std::vector<double> xs, ys;
        for (int i = 0; i < n; ++i) ((mask >> i & 1u) ? xs : ys).push_back(static_cast<double>(i + 1) * 1.5 - 7.0);
        const auto r = mann_whitney(xs, ys);
        const double err = std::abs(r.p_value - expect);
        worst = std::max(worst, err);
        if (err > 1e-12 || r.method != TestMethod::MannWhitneyExact || r.statistic != u) ok = false;
        ++configs;
      }
    }
  }
  return ok;
}

bool spearman_oracle(double& worst) {
  Rng rng(4);
  bool ok = true;
  for (int s = 0; s < 1000; ++s) {
    const int n = 3 + static_cast<int>(rng.below(60));
    std::vector<double> x(static_cast<std::size_t>(n)), y(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      x[static_cast<std::size_t>(i)] = rng.normal();
      y[static_cast<std::size_t>(i)] = 0.5 * x[static_cast<std::size_t>(i)] + rng.normal();
    }
    auto ranks = [](const std::vector<double>& v) {
      std::vector<std::size_t> idx(v.size());
      std::iota(idx.begin(), idx.end(), 0);
      std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
      std::vector<double> r(v.size());
      for (std::size_t k = 0; k < idx.size(); ++k) r[idx[k]] = static_cast<double>(k + 1);
      return r;
    };
    const auto rx = ranks(x), ry = ranks(y);
    double d2 = 0.0;
    for (int i = 0; i < n; ++i) d2 += std::pow(rx[static_cast<std::size_t>(i)] - ry[static_cast<std::size_t>(i)], 2);
    const double rho = 1.0 - 6.0 * d2 / (static_cast<double>(n) * (static_cast<double>(n) * n - 1.0));
    const double err = std::abs(spearman(x, y).statistic - rho);
    worst = std::max(worst, err);
    if (err > 1e-12) ok = false;
  }
  return ok;
}

void criterion4() {
  std::int64_t tables = 0, configs = 0;
  double wf = 0.0, wm = 0.0, ws = 0.0;
  const bool fisher_ok = fisher_oracle(tables, wf);
  const bool mw_ok = mann_whitney_oracle(configs, wm);
  const bool sp_ok = spearman_oracle(ws);
  const std::vector<double> a{1, 2}, b{3, 4}, x{1, 2, 3}, y{3, 1, 2};
  const bool ex_f = std::abs(fisher_exact({{{3, 1}, {1, 3}}}).p_value - 34.0 / 70.0) < 1e-15;
  const bool ex_m = std::abs(mann_whitney(a, b).p_value - 1.0 / 3.0) < 1e-15;
  const bool ex_s = std::abs(spearman(x, y).statistic + 0.5) < 1e-15;
  report(4, fisher_ok && mw_ok && sp_ok && ex_f && ex_m && ex_s,
         "Fisher " + std::to_string(tables) + " tables (max rel err " + fmt(wf) + "), Mann-Whitney " +
             std::to_string(configs) + " labelings (max err " + fmt(wm) + "), Spearman 1000 vectors (max err " +
             fmt(ws) + "), worked examples " + (ex_f && ex_m && ex_s ? "34/70, 1/3, -0.5" : "WRONG"));
}

// ---------------------------------------------------------------------------

void criterion5() {
  auto acc_for = [](std::int64_t n, double mean, double sd, std::int64_t neg, std::int64_t pos) {
    EdgeAccumulator a;
    a.n = n;
    a.mean = mean;
    a.m2 = sd * sd * static_cast<double>(n - 1);
    a.neg = neg;
    a.pos = pos;
    return a;
  };
  SourceAccumulators sa;
  sa.source = {0, 0, 0};
  auto& row = sa.by_layer[1];
  row.resize(4);
  row[0] = acc_for(10, -1.0, 2.0, 10, 0);  // d exactly -0.5
  row[1] = acc_for(10, -5.0, 1.0, 7, 3);   // consistency exactly 0.7
  row[2] = acc_for(10, -1.0, 1.999, 10, 0);
  row[3] = acc_for(10, -5.0, 1.0, 8, 2);
  const auto e0 = finalize(row[0]), e1 = finalize(row[1]);
  const auto edges = finalize_edges(sa, TraceConfig{});
  std::set<int> kept;
  for (const auto& e : edges) kept.insert(e.target.index);
  const bool exact_inputs = e0.d == -0.5 && e1.consistency == 0.7;
  const bool ok = exact_inputs && !kept.contains(0) && !kept.contains(1) && kept.contains(2) && kept.contains(3);
  report(5, ok,
         std::string("d = -0.5 ") + (kept.contains(0) ? "kept" : "rejected") + ", consistency = 0.7 " +
             (kept.contains(1) ? "kept" : "rejected") + ", just-past-threshold edges " +
             (kept.contains(2) && kept.contains(3) ? "kept" : "rejected"));
}

void criterion6() {
  const auto fx = make_planted_fixture();
  TraceConfig cfg;
  cfg.source_layers = {2};
  cfg.n_cells = 200;
  std::vector<int> sources(30);
  std::iota(sources.begin(), sources.end(), 0);
  const auto r = run_trace(fx.model, fx.saes, fx.batch, {{2, sources}}, cfg);
  const auto& l = r.report.layers.at(0);
  report(6, l.passes == 6200 && l.skipped_passes == 0 && l.cells == 200,
         std::to_string(l.cells) + " cells x (1 clean + " + std::to_string(l.n_sources) + " ablated) = " +
             std::to_string(l.passes) + " forward passes recorded");
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

void criterion7() {
  const auto dir = scratch_dir("c7");
  const auto fx = make_planted_fixture();
  SourcePlan plan{{0, {0, 3, 5, 8, 13, 21}}, {2, {1, 2, 4, 9, 16, 25}}, {3, {6, 7, 10, 11}}};
  TraceConfig cfg;
  cfg.source_layers = {0, 2, 3};
  cfg.n_cells = 200;
  cfg.deterministic = true;
  cfg.checkpoint_every = 50;

  auto full_cfg = cfg;
  full_cfg.checkpoint_path = dir / "full.ckpt";
  const auto full = run_trace(fx.model, fx.saes, fx.batch, plan, full_cfg);
  save_edges(dir / "full.csv", full.edges, {provenance_comment(7, full.report.config_hash)});

  auto killed_cfg = cfg;
  killed_cfg.checkpoint_path = dir / "killed.ckpt";
  killed_cfg.halt_after_cells = 50;
  const auto killed = run_trace(fx.model, fx.saes, fx.batch, plan, killed_cfg);

  auto resume_cfg = cfg;
  resume_cfg.checkpoint_path = dir / "killed.ckpt";
  resume_cfg.resume = true;
  const auto resumed = run_trace(fx.model, fx.saes, fx.batch, plan, resume_cfg);
  save_edges(dir / "resumed.csv", resumed.edges, {provenance_comment(7, resumed.report.config_hash)});

  const auto a = slurp(dir / "full.csv"), b = slurp(dir / "resumed.csv");
  const bool ok = killed.report.halted && killed.report.cells_done == 50 && killed.edges.empty() &&
                  resumed.report.resumed && !a.empty() && a == b;
  report(7, ok,
         "halted at " + std::to_string(killed.report.cells_done) + " cells, resumed run " +
             (a == b ? "byte-identical" : "DIFFERS") + " (" + std::to_string(full.edges.size()) + " edges, " +
             std::to_string(a.size()) + " bytes)");
}

// ---------------------------------------------------------------------------

void criterion8() {
  std::vector<double> ps;
  for (int rep = 0; rep < 200; ++rep) {
    const auto groups = make_null_consensus_groups(1000 + static_cast<std::uint64_t>(rep));
    ConsensusOptions o;
    o.seed = mix_seed(8, static_cast<std::uint64_t>(rep));
    ps.push_back(consensus_pairs(groups, o).enrichment.p_value);
  }
  const double ks = ks_uniform_statistic(ps);
  ConsensusOptions o;
  o.seed = 88;
  const auto planted = consensus_pairs(make_planted_consensus_groups(8), o).enrichment;
  report(8, ks < 0.12 && planted.fold > 1.0 && planted.p_value <= 0.01,
         "null KS " + fmt(ks) + " over 200 replays; planted fold " + fmt(planted.fold) + ", p " + fmt(planted.p_value));
}

void criterion9(const PlantedRun& run) {
  const CircuitGraph g(run.result.edges);
  std::vector<std::pair<int, int>> pairs;
  for (int l = 0; l + 1 < run.fx.options.n_layers; ++l) pairs.emplace_back(l, l + 1);
  const auto pmi = pmi_graph(run.fx.saes, run.fx.model, run.fx.batch, pairs);
  bool ok = true;
  std::string detail;
  for (const auto& p : pairs) {
    const auto ov = target_overlap(g, pmi, p);
    ok = ok && ov && *ov >= 0.8;
    detail += "L" + std::to_string(p.first) + "->L" + std::to_string(p.second) + " " + (ov ? fmt(*ov) : "absent") + "; ";
  }
  report(9, ok, "target overlap " + detail);
}

void criterion10() {
  const auto fx = make_coherence_fixture(10, 10000);
  std::int64_t annotated = 0, coherent = 0;
  for (const auto& e : fx.graph.edges()) {
    const auto& a = fx.catalog.annotations(e.source);
    const auto& b = fx.catalog.annotations(e.target);
    if (a.empty() || b.empty()) continue;
    ++annotated;
    bool shared = false;
    for (const auto& x : a) {
      for (const auto& y : b) shared = shared || (x.ontology == y.ontology && x.term == y.term);
    }
    if (shared) ++coherent;
  }
  const auto r = coherence_fraction(fx.graph, fx.catalog);
  const bool coherence_ok = r.total_edges == 10000 && r.annotated_edges == annotated && r.coherent_edges == coherent &&
                            r.fraction && *r.fraction == static_cast<double>(coherent) / static_cast<double>(annotated);

  const auto planted = make_planted_fixture();
  CatalogFixtureOptions co;
  co.cascades = shared_cascades();
  const auto catalog = make_planted_catalog(planted.model, co);
  CircuitGraph g;
  for (const auto& p : planted.spec.edges) {
    g.add(CausalEdge{p.source, p.target, -1.5, 1.0, 200, EdgeSign::Inhibitory});
  }
  const auto h = process_hierarchy(domain_pairs(g, catalog, "planted"));
  const bool hier_ok = !h.pairs.empty() && std::all_of(h.pairs.begin(), h.pairs.end(),
                                                        [](const DomainPair& p) { return p.mean_delta_layer() == 1.0; });
  report(10, coherence_ok && hier_ok,
         "coherence " + std::to_string(r.coherent_edges) + "/" + std::to_string(r.annotated_edges) + " vs brute force " +
             std::to_string(coherent) + "/" + std::to_string(annotated) + "; hierarchy " +
             std::to_string(h.pairs.size()) + " pairs, all mean dL = +1: " + (hier_ok ? "yes" : "no"));
}

void criterion11() {
  const auto fx = make_validation_fixture(11);
  const auto sa = sign_accuracy(fx.predictions, fx.shuffled);
  const double n = static_cast<double>(sa.evaluated);
  const double sigma = std::sqrt(0.25 / n);
  const bool sign_ok = sa.accuracy && std::abs(*sa.accuracy - 0.5) <= 3.0 * sigma;
  const auto se = per_source_enrichment(fx.predictions, fx.shuffled, 0.5);
  const double ns = static_cast<double>(se.rows.size());
  const double band = 3.0 * std::sqrt(0.05 * 0.95 / ns);
  const bool screen_ok = se.fraction_significant && std::abs(*se.fraction_significant - 0.05) <= band;

  const auto ca = sign_accuracy(fx.predictions, fx.concordant);
  const auto mc = magnitude_correlation(fx.predictions, fx.concordant);
  const bool concordant_ok = ca.accuracy && *ca.accuracy == 1.0 && mc && std::abs(mc->statistic - 1.0) < 1e-12;
  report(11, sign_ok && screen_ok && concordant_ok,
         "shuffled sign accuracy " + (sa.accuracy ? fmt(*sa.accuracy) : "absent") + " (0.5 +/- " + fmt(3 * sigma) +
             ", n=" + std::to_string(sa.evaluated) + "), Fisher screen " +
             (se.fraction_significant ? fmt(*se.fraction_significant) : "absent") + " (0.05 +/- " + fmt(band) + ", " +
             std::to_string(se.rows.size()) + " sources); concordant accuracy " +
             (ca.accuracy ? fmt(*ca.accuracy) : "absent") + ", rho " + (mc ? fmt(mc->statistic) : "absent"));
}

void criterion12() {
  const auto dir = scratch_dir("c12");
  const auto cfg = (dir / "run.cfg").string();
  std::ostringstream out, err;
  const auto t0 = Clock::now();
  std::vector<std::vector<std::string>> steps = {{"synth", "--seed", "7", "--out", dir.string()}};
  for (const char* c : {"trace", "pmi", "graph-stats", "coherence", "consensus", "novel", "hierarchy", "tissue",
                        "genepairs", "validate-perturb", "disease", "report"}) {
    steps.push_back({c, "--config", cfg});
  }
  std::string failed;
  for (const auto& s : steps) {
    if (run_command(s, out, err) != 0) {
      failed = s.front();
      break;
    }
  }
  const double secs = seconds_since(t0);
  bool populated = false;
  if (failed.empty()) {
    const auto j = read_json(dir / "run_report.json");
    populated = !j.at("conditions").empty();
    for (const auto& c : j.at("conditions")) {
      for (const auto& [k, v] : c.at("edges").items()) populated = populated && !v.is_null();
      populated = populated && !c.at("trace").is_null();
    }
  }
  report(12, failed.empty() && populated && secs < 300.0,
         (failed.empty() ? std::string("all ") + std::to_string(steps.size()) + " steps exited 0"
                         : "step '" + failed + "' failed: " + err.str()) +
             ", report fields populated: " + (populated ? "yes" : "no") + ", " + fmt(secs) + " s");
}

}  // namespace

int main() {
  auto guarded = [](int id, auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      report(id, false, std::string("exception: ") + e.what());
    }
  };
  guarded(1, criterion1);
  std::optional<PlantedRun> run;
  guarded(2, [&] {
    run = planted_run();
    criterion2(*run);
  });
  guarded(3, criterion3);
  guarded(4, criterion4);
  guarded(5, criterion5);
  guarded(6, criterion6);
  guarded(7, criterion7);
  guarded(8, criterion8);
  guarded(9, [&] {
    if (!run) throw std::runtime_error("planted trace unavailable");
    criterion9(*run);
  });
  guarded(10, criterion10);
  guarded(11, criterion11);
  guarded(12, criterion12);
  fs::remove_all(fs::temp_directory_path() / ("circuits_acceptance_" + std::to_string(::getpid())));
  std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " FAILED") << std::endl;
  return failures == 0 ? 0 : 1;
}
