// SPDX-License-Identifier: Apache-2.0

#include "circuits/validate.hpp"

#include <algorithm>
#include <cmath>

#include "circuits/table_io.hpp"

namespace circuits {

std::vector<GenePair> extract_gene_pairs(const std::vector<CausalEdge>& edges, const AnnotationCatalog& catalog,
                                         std::size_t top_n, const std::set<DomainKey>* consensus) {
  std::map<GeneKey, GenePair> acc;
  for (const auto& e : edges) {
    const auto& sg = catalog.genes(e.source);
    const auto& tg = catalog.genes(e.target);
    if (sg.empty() || tg.empty()) continue;
    bool in_consensus = false;
    if (consensus) {
      const auto s = catalog.primary_domain(e.source);
      const auto t = catalog.primary_domain(e.target);
      in_consensus = s && t && consensus->contains({*s, *t});
    }
    const std::size_t ns = std::min(top_n, sg.size());
    const std::size_t nt = std::min(top_n, tg.size());
    for (std::size_t i = 0; i < ns; ++i) {
      for (std::size_t j = 0; j < nt; ++j) {
        auto& p = acc[{sg[i], tg[j]}];
        p.source_gene = sg[i];
        p.target_gene = tg[j];
        p.weight += 1.0 / static_cast<double>(i + 1) / static_cast<double>(j + 1);
        ++p.edges;
        p.max_abs_d = std::max(p.max_abs_d, std::abs(e.d));
        p.sum_d += e.d;
        p.consensus = p.consensus || in_consensus;
      }
    }
  }
  std::vector<GenePair> out;
  out.reserve(acc.size());
  for (auto& [_, p] : acc) out.push_back(std::move(p));
  return out;
}

std::vector<GenePair> filter_predictions(const std::vector<GenePair>& raw) {
  std::vector<GenePair> out;
  std::copy_if(raw.begin(), raw.end(), std::back_inserter(out),
               [](const GenePair& p) { return p.edges >= 2 || p.max_abs_d > 2.0; });
  return out;
}

TextTable predictions_to_table(const std::vector<GenePair>& preds, std::vector<std::string> comments) {
  TextTable t;
  t.comments = std::move(comments);
  t.header = {"source_gene", "target_gene", "weight", "supporting_edges", "max_abs_d", "mean_d", "predicted_sign", "consensus"};
  for (const auto& p : preds) {
    t.rows.push_back({p.source_gene, p.target_gene, format_double(p.weight), std::to_string(p.edges),
                      format_double(p.max_abs_d), format_double(p.mean_d()), std::to_string(p.predicted_sign()),
                      p.consensus ? "1" : "0"});
  }
  return t;
}

// ---------------------------------------------------------------------------

void PerturbationTable::add(const std::string& perturbed, const std::string& response, double lfc) {
  if (!std::isfinite(lfc)) throw ContractError("non-finite LFC for " + perturbed + " -> " + response);
  auto [it, inserted] = rows_[perturbed].emplace(response, lfc);
  if (!inserted) throw FormatError("duplicate perturbation row " + perturbed + " -> " + response);
  ++n_;
}

std::optional<double> PerturbationTable::lfc(const std::string& perturbed, const std::string& response) const {
  auto it = rows_.find(perturbed);
  if (it == rows_.end()) return std::nullopt;
  auto jt = it->second.find(response);
  if (jt == it->second.end()) return std::nullopt;
  return jt->second;
}

const std::map<std::string, double>* PerturbationTable::responses(const std::string& perturbed) const {
  auto it = rows_.find(perturbed);
  return it == rows_.end() ? nullptr : &it->second;
}

PerturbationTable PerturbationTable::load(const std::filesystem::path& path) {
  const auto t = TextTable::load(path, '\t');
  const auto cp = t.column("perturbed_gene"), cr = t.column("response_gene"), cl = t.column("lfc");
  PerturbationTable out;
  for (const auto& r : t.rows) {
    const double v = parse_double(r[cl]);
    if (!std::isfinite(v)) throw FormatError(path.string() + ": non-finite LFC");
    out.add(r[cp], r[cr], v);
  }
  return out;
}

void PerturbationTable::save(const std::filesystem::path& path) const {
  TextTable t{{}, {"perturbed_gene", "response_gene", "lfc"}, {}};
  for (const auto& [p, resp] : rows_) {
    for (const auto& [r, v] : resp) t.rows.push_back({p, r, format_double(v)});
  }
  t.save(path, '\t');
}

SignAccuracy sign_accuracy(const std::vector<GenePair>& preds, const PerturbationTable& perturbations) {
  SignAccuracy s;
  for (const auto& p : preds) {
    const auto lfc = perturbations.lfc(p.source_gene, p.target_gene);
    if (!lfc) continue;
    ++s.overlapping;
    if (*lfc == 0.0) {
      ++s.zero_lfc;
      continue;
    }
    ++s.evaluated;
    if ((*lfc > 0.0 ? 1 : -1) == p.predicted_sign()) ++s.concordant;
  }
  if (s.evaluated > 0) s.accuracy = static_cast<double>(s.concordant) / static_cast<double>(s.evaluated);
  return s;
}

std::optional<TestResult> magnitude_correlation(const std::vector<GenePair>& preds, const PerturbationTable& perturbations) {
  std::vector<double> strength, response;
  for (const auto& p : preds) {
    const auto lfc = perturbations.lfc(p.source_gene, p.target_gene);
    if (!lfc) continue;
    strength.push_back(p.weight * std::abs(p.mean_d()));
    response.push_back(std::abs(*lfc));
  }
  if (strength.size() < 3) return std::nullopt;
  try {
    return spearman(strength, response);
  } catch (const UndefinedCorrelationError&) {
    return std::nullopt;
  }
}

SourceEnrichment per_source_enrichment(const std::vector<GenePair>& preds, const PerturbationTable& perturbations,
                                       double lfc_threshold) {
  if (!(lfc_threshold >= 0.0)) throw ConfigError("LFC threshold must be >= 0");
  std::map<std::string, std::set<std::string>> predicted;
  for (const auto& p : preds) predicted[p.source_gene].insert(p.target_gene);

  SourceEnrichment out;
  for (const auto& [source, targets] : predicted) {
    const auto* resp = perturbations.responses(source);
    if (!resp || resp->empty()) {
      ++out.skipped_sources;
      continue;
    }
    SourceEnrichmentRow row;
    row.source_gene = source;
    for (const auto& [gene, lfc] : *resp) {
      const int is_pred = targets.contains(gene) ? 0 : 1;
      const int is_resp = std::abs(lfc) > lfc_threshold ? 0 : 1;
      ++row.counts[static_cast<std::size_t>(is_pred)][static_cast<std::size_t>(is_resp)];
    }
    row.fisher = fisher_exact(row.counts);
    if (row.fisher.p_value < 0.05) ++out.significant;
    out.rows.push_back(std::move(row));
  }
  if (!out.rows.empty()) {
    out.fraction_significant = static_cast<double>(out.significant) / static_cast<double>(out.rows.size());
  }
  return out;
}

// ---------------------------------------------------------------------------

DiseaseMap disease_map(const DomainPairTable& pairs, const KeywordSets& categories, const std::set<DomainKey>& consensus) {
  std::map<std::string, double> centrality;
  for (const auto& [key, p] : pairs.pairs) {
    centrality[key.first] += static_cast<double>(p.support);
    if (key.second != key.first) centrality[key.second] += static_cast<double>(p.support);
  }

  auto is_disease = [&](const std::string& domain) {
    return std::any_of(categories.begin(), categories.end(),
                       [&](const auto& kv) { return matches_keyword(domain, kv.second); });
  };

  DiseaseMap out;
  for (const auto& [category, kws] : categories) {
    DiseaseRow row;
    row.category = category;
    for (const auto& [domain, _] : centrality) {
      if (matches_keyword(domain, kws)) ++row.domains;
    }
    double sum_abs_d = 0.0;
    for (const auto& [key, p] : pairs.pairs) {
      if (!matches_keyword(key.first, kws) && !matches_keyword(key.second, kws)) continue;
      row.edges += p.support;
      sum_abs_d += p.sum_abs_d;
      if (consensus.contains(key)) ++row.consensus;
    }
    if (row.edges > 0) row.mean_abs_d = sum_abs_d / static_cast<double>(row.edges);
    out.rows.push_back(std::move(row));
  }

  for (const auto& [domain, c] : centrality) (is_disease(domain) ? out.disease_centrality : out.other_centrality).push_back(c);
  if (!out.disease_centrality.empty()) out.median_disease_centrality = median(out.disease_centrality);
  if (!out.other_centrality.empty()) out.median_other_centrality = median(out.other_centrality);
  if (!out.disease_centrality.empty() && !out.other_centrality.empty()) {
    out.centrality_test = mann_whitney(out.disease_centrality, out.other_centrality);
  }

  for (const auto& [key, _] : pairs.pairs) {
    const std::size_t row = is_disease(key.first) || is_disease(key.second) ? 0 : 1;
    ++out.consensus_counts[row][consensus.contains(key) ? 0 : 1];
  }
  const auto& c = out.consensus_counts;
  const double dis_total = static_cast<double>(c[0][0] + c[0][1]);
  const double oth_total = static_cast<double>(c[1][0] + c[1][1]);
  if (dis_total > 0 && oth_total > 0 && c[1][0] > 0) {
    out.consensus_enrichment = (static_cast<double>(c[0][0]) / dis_total) / (static_cast<double>(c[1][0]) / oth_total);
  }
  out.consensus_fisher = fisher_exact(c);
  return out;
}

}  // namespace circuits
