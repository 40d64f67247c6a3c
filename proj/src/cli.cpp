// SPDX-License-Identifier: Apache-2.0

#include "circuits/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>

#include <CLI11.hpp>

#include "circuits/config.hpp"
#include "circuits/fixtures.hpp"
#include "circuits/graph.hpp"
#include "circuits/knowledge.hpp"
#include "circuits/report.hpp"
#include "circuits/validate.hpp"

namespace circuits {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
  std::string config = "run.cfg";
  std::string out;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  bool deterministic = false;
  std::vector<std::string> conditions;
  std::string resume;
  int halt_after = 0;
  int synth_cells = 200;
  int synth_sources = 12;
};

struct Context {
  RunConfig cfg;
  fs::path out;
  std::ostream& log;

  std::vector<const ConditionConfig*> selected;

  std::string comment() const { return provenance_comment(cfg.seed, cfg.hash()); }
  fs::path cond_dir(const ConditionConfig& c) const { return out / c.name; }
  fs::path edges_path(const ConditionConfig& c) const { return cond_dir(c) / "edges.csv"; }
};

Context make_context(const Options& o, std::ostream& log) {
  Context ctx{load_run_config(o.config), {}, log, {}};
  if (o.seed) ctx.cfg.seed = *o.seed;
  ctx.cfg.trace.threads = o.threads;
  ctx.cfg.trace.deterministic = o.deterministic;
  ctx.cfg.validate();
  ctx.out = o.out.empty() ? resolve_output_dir(ctx.cfg) : fs::path(o.out);
  if (o.conditions.empty()) {
    for (const auto& c : ctx.cfg.conditions) ctx.selected.push_back(&c);
  } else {
    for (const auto& n : o.conditions) ctx.selected.push_back(&ctx.cfg.condition(n));
  }
  if (ctx.selected.empty()) throw ConfigError("config defines no conditions");
  return ctx;
}

AnnotationCatalog load_catalog(const RunConfig& cfg) {
  if (cfg.annotations.empty()) throw ConfigError("config has no annotations file");
  std::optional<fs::path> genes;
  if (!cfg.gene_lists.empty()) genes = cfg.gene_lists;
  return AnnotationCatalog::load(cfg.annotations, genes);
}

SaeSet load_saes(const ConditionConfig& c) {
  SaeSet saes;
  for (const auto& p : c.saes) {
    auto sae = SaeDictionary::load(p);
    const int layer = sae.layer();
    if (!saes.emplace(layer, std::move(sae)).second) {
      throw ConfigError("condition " + c.name + " lists two SAEs for layer " + std::to_string(layer));
    }
  }
  return saes;
}

int features_per_layer(const ConditionConfig& c) { return SaeDictionary::load(c.saes.front()).n_features(); }

CircuitGraph load_graph(const Context& ctx, const ConditionConfig& c) {
  const auto path = ctx.edges_path(c);
  if (!fs::exists(path)) throw ConfigError("no edge table for condition " + c.name + " (run `trace` first): " + path.string());
  return CircuitGraph(load_edges(path, c.model_id), ConditionLabel{c.name, c.model_id, c.label, c.label});
}

std::vector<DomainPairTable> condition_pairs(const Context& ctx, const AnnotationCatalog& catalog) {
  std::vector<DomainPairTable> out;
  for (const auto* c : ctx.selected) out.push_back(domain_pairs(load_graph(ctx, *c), catalog, c->name));
  return out;
}

CellBatch traced_cells(const CellBatch& batch, int n_cells) {
  CellBatch out{batch.seq_len, batch.cells};
  std::stable_sort(out.cells.begin(), out.cells.end(), [](const Cell& a, const Cell& b) { return a.cell_id < b.cell_id; });
  if (n_cells > 0 && static_cast<std::size_t>(n_cells) < out.cells.size()) out.cells.resize(static_cast<std::size_t>(n_cells));
  return out;
}

json test_json(const TestResult& t) {
  return {{"statistic", std::isfinite(t.statistic) ? json(t.statistic) : json(format_double(t.statistic))},
          {"p_value", t.p_value},
          {"method", to_string(t.method)},
          {"approximate", t.approximate}};
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string opt_cell(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

// ---------------------------------------------------------------------------

void merge_into(AnnotationCatalog& dst, const AnnotationCatalog& src) {
  for (const auto& id : src.features()) {
    if (!src.genes(id).empty()) dst.set_genes(id, src.genes(id));
    for (const auto& a : src.annotations(id)) dst.add_annotation(id, a);
  }
}

int cmd_synth(const Options& o, std::ostream& log) {
  const std::uint64_t seed = o.seed.value_or(7);
  fs::path out = o.out.empty() ? fs::path(std::getenv("CIRCUITS_OUT_DIR") ? std::getenv("CIRCUITS_OUT_DIR") : "circuits_out")
                               : fs::path(o.out);
  fs::create_directories(out);

  struct Spec {
    std::string name, label;
    int model_id;
    std::uint64_t seed;
    CellKind kind;
    std::vector<DomainKey> cascades;
  };
  auto b_cascades = shared_cascades();
  for (const auto& c : immune_cascades()) b_cascades.push_back(c);
  const std::vector<Spec> specs = {
      {"A", "K562/K562", 0, seed, CellKind::K562Like, shared_cascades()},
      {"B", "MultiTissue/MultiTissue", 1, mix_seed(seed, 0xB), CellKind::MultiTissueLike, b_cascades}};

  RunConfig cfg;
  cfg.seed = seed;
  cfg.base_dir = out;
  cfg.trace.source_layers = {0, 1, 2, 3, 4};
  cfg.trace.sources_per_layer = o.synth_sources;
  cfg.trace.n_cells = o.synth_cells;
  cfg.tissue_reference = "A";

  AnnotationCatalog catalog;
  std::optional<LayeredModel> first_model;
  for (const auto& s : specs) {
    PlantedFixtureOptions po;
    po.seed = s.seed;
    po.n_cells = o.synth_cells;
    po.cells = s.kind;
    const auto fx = make_planted_fixture(po);
    const auto dir = out / s.name;
    fs::create_directories(dir);
    fx.model.save(dir / "model.json");
    fx.batch.save(dir / "cells.json");
    ConditionConfig cc;
    cc.name = s.name;
    cc.label = s.label;
    cc.model_id = s.model_id;
    cc.group = "model" + std::to_string(s.model_id);
    cc.model = dir / "model.json";
    cc.cells = dir / "cells.json";
    for (const auto& [layer, sae] : fx.saes) {
      const auto p = dir / ("sae_L" + std::to_string(layer) + ".json");
      sae.save(p);
      cc.saes.push_back(p);
    }
    cfg.conditions.push_back(cc);

    CatalogFixtureOptions co;
    co.seed = s.seed;
    co.model_id = s.model_id;
    co.cascades = s.cascades;
    merge_into(catalog, make_planted_catalog(fx.model, co));
    if (!first_model) first_model = fx.model;
    log << "synth: condition " << s.name << " (" << s.label << "), " << fx.spec.edges.size() << " planted edges, "
        << fx.batch.cells.size() << " cells\n";
  }

  cfg.annotations = out / "annotations.tsv";
  cfg.gene_lists = out / "gene_lists.tsv";
  cfg.domain_genes = out / "domain_genes.tsv";
  cfg.perturbation = out / "perturbation.tsv";
  cfg.tissue_keywords = out / "keywords.json";
  cfg.disease_keywords = out / "disease_keywords.json";
  catalog.save(cfg.annotations, cfg.gene_lists);
  save_domain_genes(cfg.domain_genes, make_domain_genes(catalog, seed));
  make_perturbation_table(*first_model, seed).save(cfg.perturbation);
  save_keywords(cfg.tissue_keywords, default_tissue_keywords());
  save_keywords(cfg.disease_keywords, default_disease_keywords());
  save_run_config(out / "run.cfg", cfg);
  log << "synth: wrote " << (out / "run.cfg").string() << '\n';
  return 0;
}

int cmd_trace(const Options& o, std::ostream& log) {
  auto ctx = make_context(o, log);
  if (!o.resume.empty() && ctx.selected.size() != 1) throw ConfigError("--resume needs exactly one --condition");
  const auto catalog = load_catalog(ctx.cfg);
  for (const auto* c : ctx.selected) {
    const auto model = LayeredModel::load(c->model);
    const auto saes = load_saes(*c);
    const auto batch = CellBatch::load(c->cells);
    auto tc = ctx.cfg.trace;
    const auto dir = ctx.cond_dir(*c);
    fs::create_directories(dir);
    tc.checkpoint_path = o.resume.empty() ? dir / "trace.ckpt" : fs::path(o.resume);
    tc.resume = !o.resume.empty();
    tc.halt_after_cells = o.halt_after;

    auto result = run_trace(model, saes, catalog, batch, tc, c->model_id);
    for (const auto& w : result.report.warnings) log << "trace: warning: " << w << '\n';
    write_json(dir / "trace_report.json", to_json(result.report));
    if (result.report.halted) {
      log << "trace: " << c->name << " halted after " << result.report.cells_done << " cells, checkpoint "
          << tc.checkpoint_path.string() << '\n';
      continue;
    }
    save_edges(ctx.edges_path(*c), result.edges,
               {provenance_comment(ctx.cfg.seed, result.report.config_hash), "condition=" + c->name});
    RunReport rr{c->name, c->label, ctx.cfg.seed, result.report.config_hash,
                 summarize_edges(result.edges, saes.begin()->second.n_features(), &catalog), result.report};
    write_json(dir / "run_report.json", to_json(rr));
    std::int64_t passes = 0;
    for (const auto& l : result.report.layers) passes += l.passes;
    log << "trace: " << c->name << ": " << result.edges.size() << " edges, " << passes << " forward passes, "
        << format_double(result.report.seconds) << " s\n";
  }
  return 0;
}

int cmd_pmi(const Options& o, std::ostream& log) {
  auto ctx = make_context(o, log);
  for (const auto* c : ctx.selected) {
    const auto model = LayeredModel::load(c->model);
    const auto saes = load_saes(*c);
    const auto batch = traced_cells(CellBatch::load(c->cells), ctx.cfg.trace.n_cells);
    std::vector<std::pair<int, int>> pairs;
    for (int l : ctx.cfg.trace.source_layers) {
      if (saes.contains(l) && saes.contains(l + 1)) pairs.emplace_back(l, l + 1);
    }
    const auto pmi = pmi_graph(saes, model, batch, pairs, ctx.cfg.pmi);
    std::vector<PmiEdge> tagged = pmi;
    for (auto& e : tagged) {
      e.source.model = c->model_id;
      e.target.model = c->model_id;
    }
    pmi_to_table(pmi, {ctx.comment(), "condition=" + c->name}).save(ctx.cond_dir(*c) / "pmi.csv", ',');
    const auto graph = load_graph(ctx, *c);
    TextTable t{{ctx.comment()}, {"source_layer", "target_layer", "pmi_targets", "causal_targets", "overlap"}, {}};
    for (const auto& r : overlap_table(graph, tagged, pairs)) {
      t.rows.push_back({std::to_string(r.source_layer), std::to_string(r.target_layer), std::to_string(r.pmi_targets),
                        std::to_string(r.causal_targets), format_double(r.overlap)});
      log << "pmi: " << c->name << " L" << r.source_layer << "->L" << r.target_layer << " overlap "
          << format_double(r.overlap) << '\n';
    }
    t.save(ctx.cond_dir(*c) / "pmi_overlap.csv", ',');
  }
  return 0;
}

int cmd_graph_stats(const Options& o, std::ostream& log) {
  auto ctx = make_context(o, log);
  for (const auto* c : ctx.selected) {
    const auto g = load_graph(ctx, *c);
    const auto ds = degree_stats(g);
    TextTable hubs{{ctx.comment()}, {"kind", "feature", "degree"}, {}};
    for (const auto& [f, d] : ds.top_out) hubs.rows.push_back({"out", f.str(), std::to_string(d)});
    for (const auto& [f, d] : ds.top_in) hubs.rows.push_back({"in", f.str(), std::to_string(d)});
    hubs.save(ctx.cond_dir(*c) / "hubs.csv", ',');

    std::set<int> source_layers;
    for (const auto& e : g.edges()) source_layers.insert(e.source.layer);
    TextTable att{{ctx.comment()}, {"source_layer", "target_layer", "offset", "mean_edges", "edges"}, {}};
    for (int l : source_layers) {
      for (const auto& p : attenuation_curve(g, l)) {
        att.rows.push_back({std::to_string(l), std::to_string(p.target_layer), std::to_string(p.target_layer - l),
                            format_double(p.mean_edges), std::to_string(p.edges)});
      }
    }
    att.save(ctx.cond_dir(*c) / "attenuation.csv", ',');

    int max_in = 0, max_out = 0;
    for (const auto& [_, d] : ds.degrees) {
      max_in = std::max(max_in, d.in);
      max_out = std::max(max_out, d.out);
    }
    const double coverage = target_coverage(g, features_per_layer(*c));
    write_json(ctx.cond_dir(*c) / "graph_stats.json",
               {{"edges", g.size()}, {"nodes", g.nodes().size()}, {"max_in_degree", max_in},
                {"max_out_degree", max_out}, {"target_coverage", coverage}});
    log << "graph-stats: " << c->name << ": " << g.size() << " edges, max out " << max_out << ", max in " << max_in
        << ", coverage " << format_double(coverage) << '\n';
  }
  return 0;
}

int cmd_coherence(const Options& o, std::ostream& log) {
  auto ctx = make_context(o, log);
  const auto catalog = load_catalog(ctx.cfg);
  TextTable t{{ctx.comment()}, {"condition", "total_edges", "annotated_edges", "coherent_edges", "fraction"}, {}};
  for (const auto* c : ctx.selected) {
    const auto r = coherence_fraction(load_graph(ctx, *c), catalog);
    t.rows.push_back({c->name, std::to_string(r.total_edges), std::to_string(r.annotated_edges),
                      std::to_string(r.coherent_edges), opt_cell(r.fraction)});
    log << "coherence: " << c->name << ": " << (r.fraction ? format_double(*r.fraction) : "absent") << '\n';
  }
  t.save(ctx.out / "coherence.csv", ',');
  return 0;
}

std::vector<ModelGroup> model_groups(const Context& ctx, const AnnotationCatalog& catalog) {
  std::vector<ModelGroup> groups;
  for (const auto* c : ctx.selected) {
    auto it = std::find_if(groups.begin(), groups.end(), [&](const ModelGroup& g) { return g.name == c->group; });
    if (it == groups.end()) {
      groups.push_back({c->group, {}});
      it = std::prev(groups.end());
    }
    it->conditions.push_back(domain_pairs(load_graph(ctx, *c), catalog, c->name));
  }
  if (groups.size() < 2) throw ConfigError("consensus needs conditions from at least two model groups");
  return groups;
}

std::set<DomainKey> read_consensus_keys(const fs::path& path) {
  std::set<DomainKey> keys;
  if (!fs::exists(path)) return keys;
  const auto t = TextTable::load(path, ',');
  const auto s = t.column("source_domain"), d = t.column("target_domain");
  for (const auto& r : t.rows) keys.insert({r[s], r[d]});
  return keys;
}

int cmd_consensus(const Options& o, std::ostream& log) {
  auto ctx = make_context(o, log);
  const auto catalog = load_catalog(ctx.cfg);
  const auto groups = model_groups(ctx, catalog);
  ConsensusOptions co;
  co.n_perms = ctx.cfg.consensus_permutations;
  co.seed = mix_seed(ctx.cfg.seed, 0xC0);
  const auto r = consensus_pairs(groups, co);

  TextTable t{{ctx.comment()}, {"source_domain", "target_domain"}, {}};
  for (const auto& g : groups) t.header.push_back("support_" + g.name);
  for (const auto& g : groups) t.header.push_back("mean_abs_d_" + g.name);
  t.header.push_back("high_confidence");
  for (const auto& p : r.pairs) {
    std::vector<std::string> row{p.source, p.target};
    for (auto s : p.support) row.push_back(std::to_string(s));
    for (auto d : p.mean_abs_d) row.push_back(format_double(d));
    row.push_back(p.high_confidence ? "1" : "0");
    t.rows.push_back(std::move(row));
  }
  t.save(ctx.out / "consensus.csv", ',');
  json groups_json = json::array();
  for (std::size_t i = 0; i < groups.size(); ++i) {
    groups_json.push_back({{"name", groups[i].name}, {"pairs", r.group_pair_counts[i]}});
  }
  write_json(ctx.out / "consensus.json",
             {{"provenance", ctx.comment()},
              {"consensus_pairs", r.pairs.size()},
              {"high_confidence", r.high_confidence},
              {"groups", groups_json},
              {"enrichment",
               {{"observed", r.enrichment.observed},
                {"expected", r.enrichment.expected},
                {"fold", std::isfinite(r.enrichment.fold) ? json(r.enrichment.fold) : json("inf")},
                {"p_value", r.enrichment.p_value},
                {"n_perms", r.enrichment.n_perms}}}});
  log << "consensus: " << r.pairs.size() << " pairs (" << r.high_confidence << " high-confidence), fold "
      << format_double(r.enrichment.fold) << ", p " << format_double(r.enrichment.p_value) << '\n';
  return 0;
}

int cmd_novel(const Options& o, std::ostream& log) {
  auto ctx = make_context(o, log);
  if (ctx.cfg.domain_genes.empty()) throw ConfigError("config has no domain_genes file");
  const auto catalog = load_catalog(ctx.cfg);
  const auto merged = merge_domain_pairs(condition_pairs(ctx, catalog));
  const auto known = KnownBiologyGraph::build(load_domain_genes(ctx.cfg.domain_genes));
  const auto r = novel_pairs(merged, known, ctx.selected.size());
  TextTable t{{ctx.comment()}, {"source_domain", "target_domain", "support", "mean_abs_d", "conditions"}, {}};
  for (const auto& p : r.novel) {
    t.rows.push_back({p.source, p.target, std::to_string(p.support), format_double(p.mean_abs_d()),
                      std::to_string(p.conditions.size())});
  }
  t.save(ctx.out / "novel.csv", ',');
  write_json(ctx.out / "novel.json", {{"provenance", ctx.comment()},
                                      {"known_links", known.size()},
                                      {"novel_pairs", r.novel.size()},
                                      {"novel_in_all_conditions", r.all_conditions.size()},
                                      {"annotated_edges", r.annotated_edges},
                                      {"novel_edges", r.novel_edges},
                                      {"novel_fraction", opt_json(r.novel_fraction)}});
  log << "novel: " << r.novel.size() << " novel pairs, fraction "
      << (r.novel_fraction ? format_double(*r.novel_fraction) : "absent") << '\n';
  return 0;
}

int cmd_hierarchy(const Options& o, std::ostream& log) {
  auto ctx = make_context(o, log);
  const auto catalog = load_catalog(ctx.cfg);
  const auto merged = merge_domain_pairs(condition_pairs(ctx, catalog));
  const auto h = process_hierarchy(merged);
  TextTable dt{{ctx.comment()}, {"domain", "mean_source_layer", "edges"}, {}};
  for (const auto& d : h.domains) dt.rows.push_back({d.domain, format_double(d.mean_source_layer), std::to_string(d.edges)});
  dt.save(ctx.out / "hierarchy.csv", ',');
  TextTable pt{{ctx.comment()}, {"source_domain", "target_domain", "support", "mean_delta_layer"}, {}};
  for (const auto& p : h.pairs) {
    pt.rows.push_back({p.source, p.target, std::to_string(p.support), format_double(p.mean_delta_layer())});
  }
  pt.save(ctx.out / "hierarchy_pairs.csv", ',');
  const auto loops = feedback_loops(merged);
  TextTable lt{{ctx.comment()}, {"domain_a", "domain_b"}, {}};
  for (const auto& [a, b] : loops) lt.rows.push_back({a, b});
  lt.save(ctx.out / "loops.csv", ',');
  log << "hierarchy: " << h.domains.size() << " domains, " << h.pairs.size() << " pairs, " << loops.size()
      << " reciprocal loops\n";
  return 0;
}

int cmd_tissue(const Options& o, std::ostream& log) {
  auto ctx = make_context(o, log);
  if (ctx.cfg.tissue_keywords.empty()) throw ConfigError("config has no tissue_keywords file");
  const auto catalog = load_catalog(ctx.cfg);
  const auto keywords = load_keywords(ctx.cfg.tissue_keywords);
  const auto& ref = ctx.cfg.tissue_reference.empty() ? ctx.cfg.conditions.front() : ctx.cfg.condition(ctx.cfg.tissue_reference);
  const auto ref_keys = domain_pairs(load_graph(ctx, ref), catalog, ref.name).keys();
  TextTable t{{ctx.comment()},
              {"condition", "reference", "tissue", "specific_related", "specific_unrelated", "shared_related",
               "shared_unrelated", "odds_ratio", "p_value"},
              {}};
  for (const auto* c : ctx.selected) {
    if (c->name == ref.name) continue;
    const auto keys = domain_pairs(load_graph(ctx, *c), catalog, c->name).keys();
    const auto [specific, shared] = split_specific_shared(keys, ref_keys);
    for (const auto& row : tissue_enrichment(specific, shared, keywords)) {
      t.rows.push_back({c->name, ref.name, row.tissue, std::to_string(row.counts[0][0]), std::to_string(row.counts[0][1]),
                        std::to_string(row.counts[1][0]), std::to_string(row.counts[1][1]),
                        format_double(row.fisher.statistic), format_double(row.fisher.p_value)});
      log << "tissue: " << c->name << " vs " << ref.name << " " << row.tissue << ": OR "
          << format_double(row.fisher.statistic) << ", p " << format_double(row.fisher.p_value) << '\n';
    }
  }
  t.save(ctx.out / "tissue.csv", ',');
  return 0;
}

std::vector<GenePair> predictions_for(const Context& ctx, const ConditionConfig& c, const AnnotationCatalog& catalog) {
  const auto consensus = read_consensus_keys(ctx.out / "consensus.csv");
  const auto g = load_graph(ctx, c);
  return filter_predictions(extract_gene_pairs(g.edges(), catalog, ctx.cfg.top_genes, &consensus));
}

int cmd_genepairs(const Options& o, std::ostream& log) {
  auto ctx = make_context(o, log);
  const auto catalog = load_catalog(ctx.cfg);
  for (const auto* c : ctx.selected) {
    const auto preds = predictions_for(ctx, *c, catalog);
    predictions_to_table(preds, {ctx.comment(), "condition=" + c->name}).save(ctx.cond_dir(*c) / "predictions.csv", ',');
    log << "genepairs: " << c->name << ": " << preds.size() << " gene-pair predictions\n";
  }
  return 0;
}

int cmd_validate(const Options& o, std::ostream& log) {
  auto ctx = make_context(o, log);
  if (ctx.cfg.perturbation.empty()) throw ConfigError("config has no perturbation file");
  const auto catalog = load_catalog(ctx.cfg);
  const auto pert = PerturbationTable::load(ctx.cfg.perturbation);
  for (const auto* c : ctx.selected) {
    const auto preds = predictions_for(ctx, *c, catalog);
    const auto sa = sign_accuracy(preds, pert);
    const auto mc = magnitude_correlation(preds, pert);
    const auto se = per_source_enrichment(preds, pert, ctx.cfg.lfc_threshold);
    TextTable t{{ctx.comment()},
                {"source_gene", "predicted_responsive", "predicted_unresponsive", "other_responsive",
                 "other_unresponsive", "odds_ratio", "p_value"},
                {}};
    for (const auto& r : se.rows) {
      t.rows.push_back({r.source_gene, std::to_string(r.counts[0][0]), std::to_string(r.counts[0][1]),
                        std::to_string(r.counts[1][0]), std::to_string(r.counts[1][1]),
                        format_double(r.fisher.statistic), format_double(r.fisher.p_value)});
    }
    t.save(ctx.cond_dir(*c) / "source_enrichment.csv", ',');
    write_json(ctx.cond_dir(*c) / "validation_report.json",
               {{"provenance", ctx.comment()},
                {"predictions", preds.size()},
                {"sign_accuracy",
                 {{"overlapping", sa.overlapping},
                  {"zero_lfc", sa.zero_lfc},
                  {"evaluated", sa.evaluated},
                  {"concordant", sa.concordant},
                  {"accuracy", opt_json(sa.accuracy)}}},
                {"magnitude_correlation", mc ? test_json(*mc) : json(nullptr)},
                {"source_enrichment",
                 {{"sources", se.rows.size()},
                  {"skipped_sources", se.skipped_sources},
                  {"significant", se.significant},
                  {"fraction_significant", opt_json(se.fraction_significant)},
                  {"lfc_threshold", ctx.cfg.lfc_threshold}}}});
    log << "validate-perturb: " << c->name << ": sign accuracy "
        << (sa.accuracy ? format_double(*sa.accuracy) : "absent") << " over " << sa.evaluated << " pairs, "
        << se.significant << "/" << se.rows.size() << " sources enriched\n";
  }
  return 0;
}

int cmd_disease(const Options& o, std::ostream& log) {
  auto ctx = make_context(o, log);
  if (ctx.cfg.disease_keywords.empty()) throw ConfigError("config has no disease_keywords file");
  const auto catalog = load_catalog(ctx.cfg);
  const auto merged = merge_domain_pairs(condition_pairs(ctx, catalog));
  const auto consensus = read_consensus_keys(ctx.out / "consensus.csv");
  const auto dm = disease_map(merged, load_keywords(ctx.cfg.disease_keywords), consensus);
  TextTable t{{ctx.comment()}, {"category", "domains", "edges", "consensus_pairs", "mean_abs_d"}, {}};
  for (const auto& r : dm.rows) {
    t.rows.push_back({r.category, std::to_string(r.domains), std::to_string(r.edges), std::to_string(r.consensus),
                      opt_cell(r.mean_abs_d)});
  }
  t.save(ctx.out / "disease_table.csv", ',');
  const auto& cc = dm.consensus_counts;
  write_json(ctx.out / "disease.json",
             {{"provenance", ctx.comment()},
              {"median_disease_centrality", opt_json(dm.median_disease_centrality)},
              {"median_other_centrality", opt_json(dm.median_other_centrality)},
              {"centrality_test", dm.centrality_test ? test_json(*dm.centrality_test) : json(nullptr)},
              {"consensus_counts", {{cc[0][0], cc[0][1]}, {cc[1][0], cc[1][1]}}},
              {"consensus_enrichment", opt_json(dm.consensus_enrichment)},
              {"consensus_fisher", test_json(dm.consensus_fisher)}});
  log << "disease: " << dm.rows.size() << " categories\n";
  return 0;
}

int cmd_report(const Options& o, std::ostream& log) {
  auto ctx = make_context(o, log);
  const auto catalog = load_catalog(ctx.cfg);
  std::vector<RunReport> reports;
  json all = json::array();
  for (const auto* c : ctx.selected) {
    const auto edges = load_edges(ctx.edges_path(*c), c->model_id);
    RunReport rr;
    rr.condition = c->name;
    rr.label = c->label;
    rr.seed = ctx.cfg.seed;
    rr.summary = summarize_edges(edges, features_per_layer(*c), &catalog);
    const auto trace_path = ctx.cond_dir(*c) / "trace_report.json";
    if (fs::exists(trace_path)) {
      rr.trace = trace_report_from_json(read_json(trace_path));
      rr.config_hash = rr.trace->config_hash;
    }
    const auto emitted = ctx.cond_dir(*c) / "run_report.json";
    if (fs::exists(emitted)) {
      const bool same = read_json(emitted).at("edges") == to_json(rr.summary);
      log << "report: " << c->name << ": " << (same ? "matches" : "DIFFERS FROM") << " the report emitted by trace\n";
    }
    all.push_back(to_json(rr));
    reports.push_back(std::move(rr));
  }
  write_json(ctx.out / "run_report.json", {{"provenance", ctx.comment()}, {"conditions", all}});
  auto t = table1(reports);
  t.comments = {ctx.comment()};
  t.save(ctx.out / "table1.csv", ',');
  log << "report: wrote " << (ctx.out / "run_report.json").string() << " and table1.csv\n";
  return 0;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Causal circuit tracing over sparse-autoencoder features", "circuits"};
  app.require_subcommand(1);
  Options o;
  std::uint64_t seed = 0;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "Run configuration file")->capture_default_str();
    sub->add_option("--out", o.out, "Output directory (overrides config and CIRCUITS_OUT_DIR)");
    sub->add_option_function<std::uint64_t>("--seed", [&](const std::uint64_t& s) { o.seed = s; }, "Seed override");
    sub->add_option("--threads", o.threads, "Worker threads (0: all cores)")->check(CLI::NonNegativeNumber);
    sub->add_flag("--deterministic", o.deterministic, "Serial, cell-id ordered tracing");
    sub->add_option("--condition", o.conditions, "Restrict to these conditions");
  };

  std::map<std::string, std::function<int(const Options&, std::ostream&)>> handlers = {
      {"trace", cmd_trace},         {"pmi", cmd_pmi},
      {"graph-stats", cmd_graph_stats}, {"coherence", cmd_coherence},
      {"consensus", cmd_consensus}, {"novel", cmd_novel},
      {"hierarchy", cmd_hierarchy}, {"tissue", cmd_tissue},
      {"genepairs", cmd_genepairs}, {"validate-perturb", cmd_validate},
      {"disease", cmd_disease},     {"report", cmd_report}};
  const std::map<std::string, std::string> descriptions = {
      {"trace", "Ablate source features and record significant causal edges"},
      {"pmi", "Build the PMI co-activation graph and its overlap with causal targets"},
      {"graph-stats", "Degrees, hubs, attenuation curves and target coverage"},
      {"coherence", "Fraction of annotated edges sharing an ontology term"},
      {"consensus", "Domain pairs found in every model group, with permutation enrichment"},
      {"novel", "Domain pairs absent from the gene-overlap reference"},
      {"hierarchy", "Mean layer per domain, per-pair layer offsets and reciprocal loops"},
      {"tissue", "Keyword enrichment of condition-specific domain pairs"},
      {"genepairs", "Gene-level predictions from circuit edges"},
      {"validate-perturb", "Check gene-pair predictions against perturbation log-fold changes"},
      {"disease", "Disease-category mapping of domains"},
      {"report", "Run report JSON and summary table CSV from the edge tables"}};

  auto* synth = app.add_subcommand("synth", "Write seeded planted-circuit fixtures and a run configuration");
  synth->add_option("--seed", seed, "Seed")->default_val(7);
  synth->add_option("--out", o.out, "Output directory");
  synth->add_option("--cells", o.synth_cells, "Cells per condition")->default_val(200)->check(CLI::PositiveNumber);
  synth->add_option("--sources-per-layer", o.synth_sources, "Traced sources per layer")->default_val(12)->check(CLI::NonNegativeNumber);

  std::map<CLI::App*, std::string> subs;
  for (const auto& [name, desc] : descriptions) {
    auto* sub = app.add_subcommand(name, desc);
    common(sub);
    if (name == "trace") {
      sub->add_option("--resume", o.resume, "Resume from this checkpoint");
      sub->add_option("--halt-after", o.halt_after, "Stop after the checkpoint at or past N cells")->group("");
    }
    subs[sub] = name;
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (synth->parsed()) {
      o.seed = seed;
      return cmd_synth(o, out);
    }
    for (const auto& [sub, name] : subs) {
      if (sub->parsed()) return handlers.at(name)(o, out);
    }
    err << app.help();
    return 2;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

int run_command(const std::vector<std::string>& args) { return run_command(args, std::cout, std::cerr); }

}  // namespace circuits
