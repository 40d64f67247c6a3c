// SPDX-License-Identifier: Apache-2.0
//
// Annotation-driven analyses over circuit graphs: shared-ontology
// coherence, domain pairs, cross-model consensus, novelty against a
// gene-overlap reference, layer hierarchy, reciprocal loops and tissue
// enrichment.

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
#include "circuits/graph.hpp"
#include "circuits/stats.hpp"

namespace circuits {

struct CoherenceResult {
  std::int64_t total_edges = 0;
  std::int64_t annotated_edges = 0;  // both endpoints carry >= 1 annotation
  std::int64_t coherent_edges = 0;   // ... and share at least one term
  /// Absent when no edge is annotated.
  std::optional<double> fraction;
};

CoherenceResult coherence_fraction(const CircuitGraph& g, const AnnotationCatalog& catalog);

// ---------------------------------------------------------------------------

using DomainKey = std::pair<std::string, std::string>;  // (source domain, target domain)

struct DomainPair {
  std::string source;
  std::string target;
  std::int64_t support = 0;
  double sum_abs_d = 0.0;
  double sum_source_layer = 0.0;
  double sum_delta_layer = 0.0;
  std::set<std::string> conditions;

  double mean_abs_d() const { return support ? sum_abs_d / static_cast<double>(support) : 0.0; }
  double mean_source_layer() const { return support ? sum_source_layer / static_cast<double>(support) : 0.0; }
  double mean_delta_layer() const { return support ? sum_delta_layer / static_cast<double>(support) : 0.0; }
  DomainKey key() const { return {source, target}; }
};

struct DomainPairTable {
  std::int64_t total_edges = 0;
  std::int64_t annotated_edges = 0;  // both endpoints have a primary domain
  std::map<DomainKey, DomainPair> pairs;

  std::set<DomainKey> keys() const;
};

/// Maps each edge whose endpoints both have a primary domain onto
/// (source domain, target domain).
DomainPairTable domain_pairs(const CircuitGraph& g, const AnnotationCatalog& catalog, const std::string& condition = "");
/// Sums support and |d| across tables, unioning condition labels.
DomainPairTable merge_domain_pairs(const std::vector<DomainPairTable>& tables);

// ---------------------------------------------------------------------------
// Consensus

struct ModelGroup {
  std::string name;
  std::vector<DomainPairTable> conditions;
};

struct ConsensusPair {
  std::string source;
  std::string target;
  std::vector<std::int64_t> support;  // per model group
  std::vector<double> mean_abs_d;     // per model group
  bool high_confidence = false;
};

struct ConsensusResult {
  std::vector<ConsensusPair> pairs;
  std::int64_t high_confidence = 0;
  std::vector<std::int64_t> group_pair_counts;
  PermutationResult enrichment;
};

struct ConsensusOptions {
  int n_perms = 1000;
  std::uint64_t seed = 0;
  double high_confidence_d = 1.0;
};

/// Consensus = pairs present in >= 1 condition of every group. The null
/// permutes target-domain labels over each group's edge multiset (each pair
/// repeated by its support) with sources held fixed.
ConsensusResult consensus_pairs(const std::vector<ModelGroup>& groups, const ConsensusOptions& options = {});
std::set<DomainKey> consensus_keys(const ConsensusResult& result);

// ---------------------------------------------------------------------------
// Novelty

class KnownBiologyGraph {
 public:
  static constexpr std::size_t kMinSharedGenes = 3;

  /// Links two domains iff they share >= 3 genes.
  static KnownBiologyGraph build(const std::map<std::string, std::vector<std::string>>& domain_genes);

  bool linked(const std::string& a, const std::string& b) const;
  std::size_t size() const { return links_.size(); }
  const std::set<std::pair<std::string, std::string>>& links() const { return links_; }

 private:
  std::set<std::pair<std::string, std::string>> links_;  // (a, b) with a <= b
};

/// domain_genes.tsv: term, gene.
std::map<std::string, std::vector<std::string>> load_domain_genes(const std::filesystem::path& path);
void save_domain_genes(const std::filesystem::path& path, const std::map<std::string, std::vector<std::string>>& genes);

struct NovelResult {
  std::vector<DomainPair> novel;
  std::int64_t annotated_edges = 0;
  std::int64_t novel_edges = 0;
  std::optional<double> novel_fraction;   // over annotated edges
  std::vector<DomainPair> all_conditions; // novel pairs seen in every condition
};

/// `merged` must carry condition labels; `n_conditions` is the number of
/// conditions merged.
NovelResult novel_pairs(const DomainPairTable& merged, const KnownBiologyGraph& known, std::size_t n_conditions);

// ---------------------------------------------------------------------------
// Hierarchy and loops

struct DomainLayer {
  std::string domain;
  double mean_source_layer = 0.0;
  std::int64_t edges = 0;
};

struct Hierarchy {
  std::vector<DomainLayer> domains;  // ascending mean layer, then name
  std::vector<DomainPair> pairs;     // mean_delta_layer() per pair
};

Hierarchy process_hierarchy(const DomainPairTable& table);

/// Reciprocal (A, B) with A < B, both A -> B and B -> A present. Self-pairs
/// never form loops.
std::vector<DomainKey> feedback_loops(const DomainPairTable& table);

// ---------------------------------------------------------------------------
// Tissue enrichment

/// Case-insensitive substring match of any keyword.
bool matches_keyword(const std::string& label, const std::vector<std::string>& keywords);

using KeywordSets = std::map<std::string, std::vector<std::string>>;

/// keywords.json: {"tissue": ["kw", ...], ...}
KeywordSets load_keywords(const std::filesystem::path& path);
void save_keywords(const std::filesystem::path& path, const KeywordSets& sets);

struct TissueRow {
  std::string tissue;
  Table2x2 counts{};  // {specific, shared} x {related, unrelated}
  TestResult fisher;
};

/// Pairs in `condition_pairs` absent from `reference_pairs` are specific,
/// the rest are shared.
std::pair<std::set<DomainKey>, std::set<DomainKey>> split_specific_shared(const std::set<DomainKey>& condition_pairs,
                                                                         const std::set<DomainKey>& reference_pairs);

std::vector<TissueRow> tissue_enrichment(const std::set<DomainKey>& specific, const std::set<DomainKey>& shared,
                                         const KeywordSets& keywords);

}  // namespace circuits
