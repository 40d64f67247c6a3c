// SPDX-License-Identifier: Apache-2.0

#include "circuits/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace circuits {

// ---------------------------------------------------------------------------
// Planted circuit

PlantedSpec make_planted_spec(const PlantedFixtureOptions& o) {
  if (o.n_layers < 2 || o.d_model < 2) throw ConfigError("planted fixture needs >= 2 layers and d_model >= 2");
  if (o.n_edges < 0 || o.n_edges % 2 != 0) throw ConfigError("planted edge count must be even (out-degree 2)");
  if (!(o.min_weight > 0.0) || o.max_weight < o.min_weight) throw ConfigError("invalid planted weight range");
  const int n_trans = o.n_layers - 1;
  const int n_sources = o.n_edges / 2;
  if (n_sources > o.d_model - 2) throw ConfigError("too many planted sources for d_model");

  Rng rng(mix_seed(o.seed, 0x5BEC));
  PlantedSpec spec;
  const Matrix basis = random_signed_permutation_basis(o.seed, o.d_model);
  spec.bases.assign(static_cast<std::size_t>(o.n_layers), basis);

  std::vector<int> dirs(static_cast<std::size_t>(o.d_model));
  std::iota(dirs.begin(), dirs.end(), 0);
  rng.shuffle(std::span<int>(dirs));

  // Sources per transition, as even as possible, earlier transitions first.
  std::vector<std::vector<int>> sources(static_cast<std::size_t>(n_trans));
  int next = 0;
  for (int t = 0; t < n_trans; ++t) {
    const int count = n_sources / n_trans + (t < n_sources % n_trans ? 1 : 0);
    for (int i = 0; i < count; ++i) sources[static_cast<std::size_t>(t)].push_back(dirs[static_cast<std::size_t>(next++)]);
  }

  for (int t = 0; t < n_trans; ++t) {
    std::set<int> excluded;
    for (int u = t; u < n_trans; ++u) excluded.insert(sources[static_cast<std::size_t>(u)].begin(), sources[static_cast<std::size_t>(u)].end());
    std::vector<int> candidates;
    for (int j = 0; j < o.d_model; ++j) {
      if (!excluded.contains(j)) candidates.push_back(j);
    }
    if (candidates.size() < 2) throw ConfigError("not enough target directions for the planted spec");
    for (int s : sources[static_cast<std::size_t>(t)]) {
      rng.shuffle(std::span<int>(candidates));
      for (int k = 0; k < 2; ++k) {
        PlantedEdge e;
        e.source = {0, t, s};
        e.target = {0, t + 1, candidates[static_cast<std::size_t>(k)]};
        e.weight = rng.uniform(o.min_weight, o.max_weight);
        spec.edges.push_back(e);
      }
    }
  }
  spec.validate(o.n_layers, o.d_model);
  return spec;
}

PlantedFixture make_planted_fixture(const PlantedFixtureOptions& options) {
  auto spec = make_planted_spec(options);
  auto model = build_planted_model(spec, options.n_layers, options.d_model, options.seed, options.vocab,
                                   std::max(options.seq_len, 1));
  SaeSet saes;
  for (int l = 0; l < options.n_layers; ++l) {
    saes.emplace(l, sae_from_basis(spec.bases[static_cast<std::size_t>(l)], options.n_features, options.k, l, options.seed));
  }
  auto batch = generate_cells(options.seed, options.n_cells, options.seq_len, options.vocab, options.cells);
  return PlantedFixture{options, std::move(spec), std::move(model), std::move(saes), std::move(batch)};
}

std::vector<double> planted_layer_map(const LayeredModel& model, int from_layer, int to_layer) {
  const auto* p = model.planted();
  if (!p) throw ContractError("planted_layer_map needs a planted-linear model");
  if (from_layer < 0 || to_layer >= model.n_layers() || from_layer > to_layer) throw ContractError("invalid layer range");
  const auto d = static_cast<std::size_t>(model.d_model());
  std::vector<double> m(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) m[i * d + i] = 1.0;
  std::vector<double> t(d * d), next(d * d);
  for (int l = from_layer + 1; l <= to_layer; ++l) {
    std::fill(t.begin(), t.end(), 0.0);
    for (std::size_t i = 0; i < d; ++i) t[i * d + i] = 1.0;
    for (const auto& term : p->transitions[static_cast<std::size_t>(l)]) {
      for (std::size_t r = 0; r < d; ++r) {
        for (std::size_t c = 0; c < d; ++c) {
          t[r * d + c] += static_cast<double>(term.weight) * term.write[r] * term.read[c];
        }
      }
    }
    for (std::size_t r = 0; r < d; ++r) {
      for (std::size_t c = 0; c < d; ++c) {
        double acc = 0.0;
        for (std::size_t k = 0; k < d; ++k) acc += t[r * d + k] * m[k * d + c];
        next[r * d + c] = acc;
      }
    }
    m.swap(next);
  }
  return m;
}

double planted_influence(const LayeredModel& model, const FeatureId& source, const FeatureId& target) {
  const auto* p = model.planted();
  if (!p) throw ContractError("planted_influence needs a planted-linear model");
  if (target.layer < source.layer) return 0.0;
  const auto& sb = p->spec.bases[static_cast<std::size_t>(source.layer)];
  const auto& tb = p->spec.bases[static_cast<std::size_t>(target.layer)];
  if (source.index >= sb.cols() || target.index >= tb.cols()) return 0.0;
  const auto m = planted_layer_map(model, source.layer, target.layer);
  const auto d = static_cast<std::size_t>(model.d_model());
  double acc = 0.0;
  for (std::size_t r = 0; r < d; ++r) {
    double mr = 0.0;
    for (std::size_t c = 0; c < d; ++c) mr += m[r * d + c] * sb(static_cast<int>(c), source.index);
    acc += static_cast<double>(tb(static_cast<int>(r), target.index)) * mr;
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Annotation fixtures

namespace {

const std::vector<std::string>& base_processes() {
  static const std::vector<std::string> names = {
      "DNA Repair", "Cell Cycle Arrest", "Mitotic Spindle Checkpoint", "Kinetochore Assembly",
      "Centromere Assembly", "G2/M Transition", "Cytokinesis", "DNA Replication",
      "Telomere Maintenance", "Chromatin Organization", "RNA Splicing", "mRNA Surveillance",
      "Translation Initiation", "Ribosome Biogenesis", "Golgi Organization", "COPII Vesicle Coating",
      "Vesicle Transport", "Protein Localization", "Endosome Organization", "Protein Catabolism",
      "Proteasomal Degradation", "Autophagy", "Unfolded Protein Response", "Apoptotic Process",
      "Nervous System Development", "Cholesterol Biosynthesis", "Fatty Acid Oxidation", "Glycolysis",
      "Oxidative Phosphorylation", "Lipid Transport", "Insulin Signaling", "MAPK Cascade",
      "Ras Signaling", "Wnt Signaling", "Notch Signaling", "Hedgehog Signaling",
      "TGF-beta Signaling", "Cell Adhesion", "Cell Migration", "Angiogenesis",
      "Wound Healing", "Stem Cell Maintenance", "Cell Fate Commitment", "Gene Expression Regulation",
      "Immune Response", "T Cell Activation", "B Cell Receptor Signaling", "Antigen Presentation",
      "Interferon Signaling", "Inflammatory Response", "Leukocyte Chemotaxis", "Kidney Development",
      "Renal Filtration", "Sodium Ion Transport", "Blood Coagulation", "Platelet Activation",
      "Erythrocyte Differentiation", "Hemoglobin Metabolism", "Heme Biosynthesis", "Lung Epithelium Development"};
  return names;
}

bool immune_like(const std::string& s) {
  return matches_keyword(s, {"immune", "T Cell", "B Cell", "Antigen", "Interferon", "Inflammatory", "Leukocyte"});
}

}  // namespace

std::vector<std::string> domain_vocabulary(std::size_t n) {
  static const char* prefixes[] = {"", "Regulation of ", "Positive Regulation of ", "Negative Regulation of "};
  const auto& base = base_processes();
  std::vector<std::string> out;
  for (const char* pre : prefixes) {
    for (const auto& b : base) {
      if (out.size() == n) return out;
      out.push_back(pre + b);
    }
  }
  for (std::size_t i = 0; out.size() < n; ++i) out.push_back("Process " + std::to_string(i + 1));
  return out;
}

std::string gene_name(int token) {
  std::string digits = std::to_string(token);
  return "G" + std::string(digits.size() < 4 ? 4 - digits.size() : 0, '0') + digits;
}

std::vector<std::vector<std::string>> planted_direction_genes(const LayeredModel& model) {
  const auto* p = model.planted();
  if (!p) throw ContractError("planted_direction_genes needs a planted-linear model");
  const auto& b0 = p->spec.bases.front();
  std::vector<std::vector<std::string>> out(static_cast<std::size_t>(b0.cols()));
  for (int tok = 1; tok < model.vocab(); ++tok) {
    const auto row = p->token_embedding.row(tok);
    int best = -1;
    double best_v = 0.5;
    for (int j = 0; j < b0.cols(); ++j) {
      double dot = 0.0;
      for (int r = 0; r < b0.rows(); ++r) dot += static_cast<double>(row[static_cast<std::size_t>(r)]) * b0(r, j);
      if (dot > best_v) {
        best_v = dot;
        best = j;
      }
    }
    if (best >= 0) out[static_cast<std::size_t>(best)].push_back(gene_name(tok));
  }
  return out;
}

std::vector<DomainKey> shared_cascades() {
  return {{"DNA Repair", "Cell Cycle Arrest"},
          {"Centromere Assembly", "Mitotic Spindle Checkpoint"},
          {"Nervous System Development", "Proteasomal Degradation"},
          {"MAPK Cascade", "Gene Expression Regulation"},
          {"Cholesterol Biosynthesis", "Lipid Transport"},
          {"Golgi Organization", "Vesicle Transport"},
          {"RNA Splicing", "mRNA Surveillance"},
          {"DNA Replication", "G2/M Transition"},
          {"Unfolded Protein Response", "Apoptotic Process"},
          {"Wnt Signaling", "Cell Fate Commitment"},
          {"Ras Signaling", "Cell Migration"},
          {"Kinetochore Assembly", "Cytokinesis"},
          {"Insulin Signaling", "Glycolysis"},
          {"Protein Catabolism", "Chromatin Organization"},
          {"Autophagy", "Endosome Organization"}};
}

std::vector<DomainKey> immune_cascades() {
  return {{"Immune Response", "Inflammatory Response"},
          {"T Cell Activation", "Interferon Signaling"},
          {"Antigen Presentation", "T Cell Activation"},
          {"B Cell Receptor Signaling", "Immune Response"},
          {"Leukocyte Chemotaxis", "Inflammatory Response"},
          {"Interferon Signaling", "Antigen Presentation"},
          {"Inflammatory Response", "Leukocyte Chemotaxis"},
          {"Kidney Development", "Renal Filtration"},
          {"Erythrocyte Differentiation", "Hemoglobin Metabolism"},
          {"Platelet Activation", "Blood Coagulation"}};
}

AnnotationCatalog make_planted_catalog(const LayeredModel& model, const CatalogFixtureOptions& o) {
  const auto* p = model.planted();
  if (!p) throw ContractError("make_planted_catalog needs a planted-linear model");
  Rng rng(mix_seed(o.seed, 0xCA7A + static_cast<std::uint64_t>(o.model_id)));
  const auto genes = planted_direction_genes(model);

  std::set<std::string> cascade_domains;
  for (const auto& [a, b] : o.cascades) {
    cascade_domains.insert(a);
    cascade_domains.insert(b);
  }
  std::vector<std::string> background;
  for (const auto& d : domain_vocabulary(4 * base_processes().size())) {
    if (background.size() == o.n_background_domains) break;
    if (!cascade_domains.contains(d) && !immune_like(d)) background.push_back(d);
  }
  if (background.empty()) throw ConfigError("no background domains available");

  // Planted sources in spec order get consecutive cascades.
  std::map<std::pair<int, int>, std::size_t> cascade_of;  // (layer, index) -> cascade id
  std::map<std::pair<int, int>, std::size_t> target_of;
  std::size_t next = 0;
  for (const auto& e : p->spec.edges) {
    const std::pair<int, int> s{e.source.layer, e.source.index};
    if (!cascade_of.contains(s)) cascade_of[s] = next++;
  }
  for (const auto& e : p->spec.edges) {
    const std::pair<int, int> t{e.target.layer, e.target.index};
    if (!target_of.contains(t)) target_of[t] = cascade_of[{e.source.layer, e.source.index}];
  }

  auto log_p = [&](double lo, double hi) { return std::pow(10.0, -rng.uniform(lo, hi)); };
  auto pick = [&](const std::vector<std::string>& v) { return v[static_cast<std::size_t>(rng.below(v.size()))]; };

  AnnotationCatalog cat;
  const int n_dirs = p->spec.bases.front().cols();
  for (int l = 0; l < model.n_layers(); ++l) {
    for (int i = 0; i < n_dirs; ++i) {
      const FeatureId id{o.model_id, l, i};
      const auto& g = genes[static_cast<std::size_t>(i)];
      cat.set_genes(id, {g.begin(), g.begin() + static_cast<std::ptrdiff_t>(std::min(o.genes_per_feature, g.size()))});

      std::optional<std::size_t> cascade;
      bool is_source = false;
      if (!o.cascades.empty()) {
        if (auto it = cascade_of.find({l, i}); it != cascade_of.end()) {
          cascade = it->second % o.cascades.size();
          is_source = true;
        } else if (auto jt = target_of.find({l, i}); jt != target_of.end()) {
          cascade = jt->second % o.cascades.size();
        }
      }
      if (!cascade && rng.uniform() < 0.15) continue;  // left unannotated

      const std::string primary = cascade ? (is_source ? o.cascades[*cascade].first : o.cascades[*cascade].second)
                                          : pick(background);
      cat.add_annotation(id, {Ontology::GoBp, primary, cascade ? log_p(6.0, 9.0) : log_p(2.0, 5.5)});
      cat.add_annotation(id, {Ontology::GoBp, pick(background), log_p(1.4, 1.9)});
      if (cascade) {
        cat.add_annotation(id, {Ontology::Kegg, "hsa_circuit_" + std::to_string(*cascade), log_p(3.0, 6.0)});
      } else {
        cat.add_annotation(id, {Ontology::Kegg, "hsa_" + std::to_string(rng.below(40)), log_p(1.5, 4.0)});
      }
      cat.add_annotation(id, {Ontology::Reactome, "R-HSA-" + std::to_string(100 + rng.below(40)), log_p(1.5, 4.0)});
      cat.add_annotation(id, {Ontology::String, "STRING cluster " + std::to_string(rng.below(25)), log_p(1.5, 4.0)});
      if (rng.uniform() < 0.5) {
        cat.add_annotation(id, {Ontology::Trrust, "TF" + std::to_string(rng.below(15)), log_p(1.5, 3.0)});
      }
    }
  }
  return cat;
}

std::map<std::string, std::vector<std::string>> make_domain_genes(const AnnotationCatalog& catalog, std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0xD06E));
  std::map<std::string, std::set<std::string>> sets;
  std::vector<std::string> pool;
  for (const auto& id : catalog.features()) {
    const auto domain = catalog.primary_domain(id);
    const auto& genes = catalog.genes(id);
    pool.insert(pool.end(), genes.begin(), genes.end());
    if (!domain) continue;
    auto& s = sets[*domain];
    for (std::size_t i = 0; i < std::min<std::size_t>(2, genes.size()); ++i) s.insert(genes[i]);
  }
  std::sort(pool.begin(), pool.end());
  pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
  if (pool.empty()) return {};
  for (auto& [domain, s] : sets) {
    for (int k = 0; k < 4; ++k) s.insert(pool[static_cast<std::size_t>(rng.below(pool.size()))]);
  }
  // Every other shared cascade is documented biology: its endpoints share genes.
  const auto cascades = shared_cascades();
  for (std::size_t c = 0; c < cascades.size(); c += 2) {
    const auto& [a, b] = cascades[c];
    if (!sets.contains(a) || !sets.contains(b)) continue;
    for (int k = 0; k < 3; ++k) {
      const auto& g = pool[static_cast<std::size_t>(rng.below(pool.size()))];
      sets[a].insert(g);
      sets[b].insert(g);
    }
  }
  std::map<std::string, std::vector<std::string>> out;
  for (const auto& [d, s] : sets) out[d] = {s.begin(), s.end()};
  return out;
}

KeywordSets default_tissue_keywords() {
  return {{"immune", {"immune", "leukocyte", "T cell", "B cell", "interferon", "inflammatory", "antigen"}},
          {"kidney", {"kidney", "renal", "sodium ion"}},
          {"blood", {"blood", "erythrocyte", "hemoglobin", "platelet", "heme", "coagulation"}}};
}

KeywordSets default_disease_keywords() {
  return {{"cancer", {"DNA repair", "cell cycle", "telomere", "DNA replication", "apoptotic"}},
          {"neurodegeneration", {"nervous system", "protein catabolism", "proteasomal", "autophagy", "unfolded protein"}},
          {"immunodeficiency", {"immune response", "antigen", "T cell", "B cell"}},
          {"autoimmunity", {"interferon", "inflammatory"}},
          {"metabolic disease", {"cholesterol", "fatty acid", "insulin", "glycolysis", "lipid"}},
          {"cardiovascular disease", {"angiogenesis", "platelet", "coagulation"}},
          {"anemia", {"erythrocyte", "hemoglobin", "heme"}},
          {"kidney disease", {"kidney", "renal", "sodium ion"}},
          {"lung disease", {"lung"}},
          {"developmental disorder", {"wnt", "notch", "hedgehog", "stem cell", "cell fate"}},
          {"mitochondrial disease", {"oxidative phosphorylation", "fatty acid oxidation"}}};
}

PerturbationTable make_perturbation_table(const LayeredModel& model, std::uint64_t seed, int n_perturbed,
                                          int responses_per_gene) {
  const auto* p = model.planted();
  if (!p) throw ContractError("make_perturbation_table needs a planted-linear model");
  Rng rng(mix_seed(seed, 0x9E27));
  const auto genes = planted_direction_genes(model);
  const auto m = planted_layer_map(model, 0, model.n_layers() - 1);
  const auto& b = p->spec.bases.front();
  const auto d = static_cast<std::size_t>(model.d_model());
  const int n_dirs = b.cols();

  auto influence = [&](int from, int to) {
    double acc = 0.0;
    for (std::size_t r = 0; r < d; ++r) {
      double mr = 0.0;
      for (std::size_t c = 0; c < d; ++c) mr += m[r * d + c] * b(static_cast<int>(c), from);
      acc += static_cast<double>(b(static_cast<int>(r), to)) * mr;
    }
    return acc;
  };

  std::vector<std::pair<std::string, int>> perturbed;
  std::set<int> seen;
  for (const auto& e : p->spec.edges) {
    if (!seen.insert(e.source.index).second) continue;
    const auto& g = genes[static_cast<std::size_t>(e.source.index)];
    for (std::size_t k = 0; k < std::min<std::size_t>(2, g.size()); ++k) perturbed.emplace_back(g[k], e.source.index);
  }
  if (static_cast<int>(perturbed.size()) > n_perturbed) perturbed.resize(static_cast<std::size_t>(n_perturbed));

  std::vector<std::pair<std::string, int>> all;
  for (int j = 0; j < n_dirs; ++j) {
    for (const auto& g : genes[static_cast<std::size_t>(j)]) all.emplace_back(g, j);
  }

  PerturbationTable table;
  for (const auto& [pg, dir] : perturbed) {
    std::vector<std::pair<std::string, int>> responses;
    // Genes of directions the perturbed one influences come first.
    for (const auto& [g, j] : all) {
      if (g != pg && std::abs(influence(dir, j)) > 0.0 && rng.uniform() < 0.7) responses.emplace_back(g, j);
    }
    std::vector<std::pair<std::string, int>> rest;
    for (const auto& gj : all) {
      if (gj.first != pg && std::abs(influence(dir, gj.second)) == 0.0) rest.push_back(gj);
    }
    rng.shuffle(std::span<std::pair<std::string, int>>(rest));
    for (const auto& gj : rest) {
      if (static_cast<int>(responses.size()) >= responses_per_gene) break;
      responses.push_back(gj);
    }
    for (const auto& [rg, j] : responses) {
      const double lfc = -0.8 * influence(dir, j) * (1.0 + 0.2 * rng.normal()) + 0.25 * rng.normal();
      table.add(pg, rg, lfc);
    }
  }
  return table;
}

// ---------------------------------------------------------------------------
// Oracle fixtures

CoherenceFixture make_coherence_fixture(std::uint64_t seed, int n_edges) {
  Rng rng(mix_seed(seed, 0xC0E));
  constexpr int kLayers = 6, kFeatures = 200;
  const Ontology onts[] = {Ontology::GoBp, Ontology::Kegg, Ontology::Reactome, Ontology::String, Ontology::Trrust};
  CoherenceFixture fx;
  for (int l = 0; l < kLayers; ++l) {
    for (int i = 0; i < kFeatures; ++i) {
      if (rng.uniform() < 0.25) continue;
      const int n_terms = 1 + static_cast<int>(rng.below(4));
      for (int t = 0; t < n_terms; ++t) {
        const Ontology o = onts[rng.below(5)];
        fx.catalog.add_annotation({0, l, i}, {o, "T" + std::to_string(rng.below(40)), rng.uniform(1e-6, 0.04)});
      }
    }
  }
  CircuitGraph g;
  while (static_cast<int>(g.size()) < n_edges) {
    const int sl = static_cast<int>(rng.below(kLayers - 1));
    const int tl = sl + 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(kLayers - 1 - sl)));
    CausalEdge e;
    e.source = {0, sl, static_cast<int>(rng.below(kFeatures))};
    e.target = {0, tl, static_cast<int>(rng.below(kFeatures))};
    e.d = -rng.uniform(0.6, 3.0);
    e.consistency = rng.uniform(0.71, 1.0);
    e.n = 200;
    g.add(e);
  }
  fx.graph = std::move(g);
  return fx;
}

namespace {

DomainPairTable random_pairs(Rng& rng, const std::vector<std::string>& domains, int n_edges, const std::string& condition) {
  DomainPairTable t;
  for (int i = 0; i < n_edges; ++i) {
    const auto& s = domains[static_cast<std::size_t>(rng.below(domains.size()))];
    const auto& d = domains[static_cast<std::size_t>(rng.below(domains.size()))];
    auto& p = t.pairs[{s, d}];
    p.source = s;
    p.target = d;
    ++p.support;
    p.sum_abs_d += rng.uniform(0.6, 2.0);
    p.sum_source_layer += static_cast<double>(rng.below(4));
    p.sum_delta_layer += 1.0;
    p.conditions.insert(condition);
  }
  t.total_edges = n_edges;
  t.annotated_edges = n_edges;
  return t;
}

}  // namespace

std::vector<ModelGroup> make_null_consensus_groups(std::uint64_t seed, int n_domains, int edges_per_group) {
  Rng rng(mix_seed(seed, 0xC05E));
  const auto domains = domain_vocabulary(static_cast<std::size_t>(n_domains));
  std::vector<ModelGroup> groups(2);
  groups[0].name = "model-a";
  const int half = edges_per_group / 2;
  groups[0].conditions.push_back(random_pairs(rng, domains, half, "a1"));
  groups[0].conditions.push_back(random_pairs(rng, domains, edges_per_group - half, "a2"));
  groups[1].name = "model-b";
  groups[1].conditions.push_back(random_pairs(rng, domains, edges_per_group, "b1"));
  return groups;
}

std::vector<ModelGroup> make_planted_consensus_groups(std::uint64_t seed, int n_domains, int edges_per_group, int n_shared) {
  auto groups = make_null_consensus_groups(seed, n_domains, edges_per_group);
  Rng rng(mix_seed(seed, 0xC05F));
  const auto domains = domain_vocabulary(static_cast<std::size_t>(n_domains));
  for (int k = 0; k < n_shared; ++k) {
    const auto& s = domains[static_cast<std::size_t>(rng.below(domains.size()))];
    const auto& d = domains[static_cast<std::size_t>(rng.below(domains.size()))];
    for (auto& g : groups) {
      auto& table = g.conditions.front();
      auto& p = table.pairs[{s, d}];
      p.source = s;
      p.target = d;
      ++p.support;
      p.sum_abs_d += 1.5;
      p.sum_delta_layer += 1.0;
      p.conditions.insert(g.name);
      ++table.total_edges;
      ++table.annotated_edges;
    }
  }
  return groups;
}

ValidationFixture make_validation_fixture(std::uint64_t seed, int n_sources, int targets_per_source, int responses_per_source) {
  if (responses_per_source < targets_per_source) throw ConfigError("responses must cover the predicted targets");
  Rng rng(mix_seed(seed, 0x7A1D));
  constexpr int kPool = 600;
  auto response_gene = [](int i) { return "R" + std::to_string(i); };

  ValidationFixture fx;
  for (int s = 0; s < n_sources; ++s) {
    const std::string source = "S" + std::to_string(s);
    std::vector<int> genes(kPool);
    std::iota(genes.begin(), genes.end(), 0);
    rng.shuffle(std::span<int>(genes));
    for (int t = 0; t < targets_per_source; ++t) {
      GenePair p;
      p.source_gene = source;
      p.target_gene = response_gene(genes[static_cast<std::size_t>(t)]);
      p.edges = 1 + static_cast<std::int64_t>(rng.below(3));
      const double sign = rng.uniform() < 0.7 ? -1.0 : 1.0;
      const double d = rng.uniform(0.6, 3.0);
      p.sum_d = sign * d * static_cast<double>(p.edges);
      p.max_abs_d = d;
      p.weight = rng.uniform(0.05, 2.0);
      fx.predictions.push_back(p);
      fx.concordant.add(p.source_gene, p.target_gene, p.predicted_sign() * p.weight * std::abs(p.mean_d()));
    }
    for (int r = 0; r < responses_per_source; ++r) {
      fx.measured.add(source, response_gene(genes[static_cast<std::size_t>(r)]), rng.normal());
    }
  }

  std::vector<double> values;
  for (const auto& [p, resp] : fx.measured.rows()) {
    for (const auto& [r, v] : resp) values.push_back(v);
  }
  rng.shuffle(std::span<double>(values));
  std::size_t k = 0;
  for (const auto& [p, resp] : fx.measured.rows()) {
    for (const auto& [r, v] : resp) fx.shuffled.add(p, r, values[k++]);
  }
  return fx;
}

}  // namespace circuits
