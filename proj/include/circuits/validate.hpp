// SPDX-License-Identifier: Apache-2.0
//
// Gene-level predictions derived from circuit edges, checked against
// perturbation log-fold changes, and disease-category mapping of domains.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "circuits/catalog.hpp"
#include "circuits/knowledge.hpp"
#include "circuits/stats.hpp"
#include "circuits/tracer.hpp"

namespace circuits {

using GeneKey = std::pair<std::string, std::string>;  // (source gene, target gene)

struct GenePair {
  std::string source_gene;
  std::string target_gene;
  double weight = 0.0;          // sum over edges of (1/source rank) * (1/target rank)
  std::int64_t edges = 0;       // supporting edges
  double max_abs_d = 0.0;
  double sum_d = 0.0;           // signed d summed over supporting edges
  bool consensus = false;       // some supporting edge maps onto a consensus domain pair

  double mean_d() const { return edges ? sum_d / static_cast<double>(edges) : 0.0; }
  /// Sign of the mean d over supporting edges (+1 / -1).
  int predicted_sign() const { return sum_d < 0.0 ? -1 : 1; }
};

/// Crosses the top_n genes of each endpoint for every edge and accumulates
/// per gene pair. Pairs are sorted by key.
std::vector<GenePair> extract_gene_pairs(const std::vector<CausalEdge>& edges, const AnnotationCatalog& catalog,
                                         std::size_t top_n = 10, const std::set<DomainKey>* consensus = nullptr);

/// Keeps pairs with >= 2 supporting edges or max |d| > 2.
std::vector<GenePair> filter_predictions(const std::vector<GenePair>& raw);

TextTable predictions_to_table(const std::vector<GenePair>& preds, std::vector<std::string> comments = {});

// ---------------------------------------------------------------------------

class PerturbationTable {
 public:
  /// Throws ContractError on non-finite LFC, FormatError on duplicates.
  void add(const std::string& perturbed, const std::string& response, double lfc);
  std::optional<double> lfc(const std::string& perturbed, const std::string& response) const;
  /// Response genes measured under `perturbed`.
  const std::map<std::string, double>* responses(const std::string& perturbed) const;
  std::size_t size() const { return n_; }
  const std::map<std::string, std::map<std::string, double>>& rows() const { return rows_; }

  /// perturbation.tsv: perturbed_gene, response_gene, lfc.
  static PerturbationTable load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

 private:
  std::map<std::string, std::map<std::string, double>> rows_;
  std::size_t n_ = 0;
};

struct SignAccuracy {
  std::int64_t overlapping = 0;
  std::int64_t zero_lfc = 0;   // excluded
  std::int64_t evaluated = 0;
  std::int64_t concordant = 0;
  std::optional<double> accuracy;
};

SignAccuracy sign_accuracy(const std::vector<GenePair>& preds, const PerturbationTable& perturbations);

/// Spearman between weight * |mean d| and |LFC| over overlapping pairs.
/// Absent when fewer than 3 pairs or a side has no rank variance.
std::optional<TestResult> magnitude_correlation(const std::vector<GenePair>& preds, const PerturbationTable& perturbations);

struct SourceEnrichmentRow {
  std::string source_gene;
  Table2x2 counts{};  // {predicted, not} x {responsive, not}
  TestResult fisher;
};

struct SourceEnrichment {
  std::vector<SourceEnrichmentRow> rows;
  std::int64_t skipped_sources = 0;  // no measured responses
  std::int64_t significant = 0;      // p < 0.05, uncorrected
  std::optional<double> fraction_significant;
};

SourceEnrichment per_source_enrichment(const std::vector<GenePair>& preds, const PerturbationTable& perturbations,
                                       double lfc_threshold = 0.5);

// ---------------------------------------------------------------------------

struct DiseaseRow {
  std::string category;
  std::int64_t domains = 0;
  std::int64_t edges = 0;
  std::int64_t consensus = 0;
  std::optional<double> mean_abs_d;
};

struct DiseaseMap {
  std::vector<DiseaseRow> rows;
  std::vector<double> disease_centrality;
  std::vector<double> other_centrality;
  std::optional<TestResult> centrality_test;  // Mann-Whitney, disease vs other
  std::optional<double> median_disease_centrality;
  std::optional<double> median_other_centrality;
  Table2x2 consensus_counts{};                  // {disease, other} x {consensus, not}
  std::optional<double> consensus_enrichment;  // consensus fraction ratio
  TestResult consensus_fisher;
};

/// `categories` maps a disease category to its keywords (disease_keywords.json).
DiseaseMap disease_map(const DomainPairTable& pairs, const KeywordSets& categories, const std::set<DomainKey>& consensus);

}  // namespace circuits
