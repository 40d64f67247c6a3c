// SPDX-License-Identifier: Apache-2.0
//
// Per-feature ontology annotations and ranked gene lists.

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "circuits/common.hpp"

namespace circuits {

enum class Ontology { GoBp, Kegg, Reactome, String, Trrust };

const char* to_string(Ontology o);
Ontology parse_ontology(std::string_view text);

struct Annotation {
  Ontology ontology = Ontology::GoBp;
  std::string term;
  double p_value = 1.0;
};

class AnnotationCatalog {
 public:
  /// Throws ConfigError unless p is in (0, 1].
  void add_annotation(const FeatureId& feature, Annotation annotation);
  /// Genes in rank order (rank 1 first).
  void set_genes(const FeatureId& feature, std::vector<std::string> ranked_genes);

  bool annotated(const FeatureId& feature) const;
  const std::vector<Annotation>& annotations(const FeatureId& feature) const;
  const std::vector<std::string>& genes(const FeatureId& feature) const;
  /// Interned (ontology, term) ids, sorted ascending.
  const std::vector<int>& term_ids(const FeatureId& feature) const;
  /// GO-BP term with the smallest p-value (ties: lexicographically smallest).
  std::optional<std::string> primary_domain(const FeatureId& feature) const;

  /// Every feature with at least one annotation or gene at `layer`,
  /// sorted by index.
  std::vector<FeatureId> features_at_layer(int layer) const;
  std::vector<FeatureId> features() const;
  bool covers_layer(int layer) const;

  /// annotations.tsv: feature_id, ontology, term, p_value.
  /// gene_lists.tsv: feature_id, rank, gene (ranks contiguous from 1).
  static AnnotationCatalog load(const std::filesystem::path& annotations,
                                const std::optional<std::filesystem::path>& gene_lists = std::nullopt);
  void save(const std::filesystem::path& annotations, const std::filesystem::path& gene_lists) const;

 private:
  struct Entry {
    std::vector<Annotation> annotations;
    std::vector<std::string> genes;
    std::vector<int> term_ids;
  };
  int intern(Ontology o, const std::string& term);

  std::unordered_map<FeatureId, Entry, FeatureIdHash> entries_;
  std::unordered_map<std::string, int> term_index_;
};

}  // namespace circuits
