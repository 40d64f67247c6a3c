// SPDX-License-Identifier: Apache-2.0
//
// Seeded synthetic inputs: planted-circuit models with matching SAEs and
// catalogs, file-compatible annotation/perturbation fixtures, and the
// small oracle fixtures used by the tests.

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "circuits/catalog.hpp"
#include "circuits/graph.hpp"
#include "circuits/knowledge.hpp"
#include "circuits/model.hpp"
#include "circuits/sae.hpp"
#include "circuits/validate.hpp"

namespace circuits {

// ---------------------------------------------------------------------------
// Planted circuit

struct PlantedFixtureOptions {
  std::uint64_t seed = 7;
  int n_layers = 6;
  int d_model = 32;
  int n_features = 64;
  int k = 4;
  int n_edges = 50;
  double min_weight = 0.5;
  double max_weight = 2.0;
  int n_cells = 200;
  int seq_len = 128;
  int vocab = 256;
  CellKind cells = CellKind::K562Like;
};

/// Edges between adjacent layers only. Each transition gets the same share
/// of edges; every source has out-degree 2 and appears at one transition,
/// and no target is reused as a source further down. Weights are drawn
/// uniformly from [min_weight, max_weight]. One signed-permutation basis is
/// shared by all layers.
PlantedSpec make_planted_spec(const PlantedFixtureOptions& options);

struct PlantedFixture {
  PlantedFixtureOptions options;
  PlantedSpec spec;
  LayeredModel model;
  SaeSet saes;
  CellBatch batch;
};

PlantedFixture make_planted_fixture(const PlantedFixtureOptions& options = {});

/// Dense map from the state at `from_layer` to the state at `to_layer`
/// (row-major d x d, double), composed from the planted transitions.
std::vector<double> planted_layer_map(const LayeredModel& model, int from_layer, int to_layer);

/// dir_target^T * M(source.layer -> target.layer) * dir_source for a
/// planted-linear model whose SAEs decode onto the spec bases.
double planted_influence(const LayeredModel& model, const FeatureId& source, const FeatureId& target);

// ---------------------------------------------------------------------------
// Annotation fixtures

/// Deterministic list of distinct biological-process style labels.
std::vector<std::string> domain_vocabulary(std::size_t n);
std::string gene_name(int token);

/// Genes (tokens) that embed onto each layer-0 direction of a planted model,
/// in token order.
std::vector<std::vector<std::string>> planted_direction_genes(const LayeredModel& model);

struct CatalogFixtureOptions {
  std::uint64_t seed = 7;
  int model_id = 0;
  /// Domain pairs handed to planted edges in order (source domain, target domain).
  std::vector<DomainKey> cascades;
  std::size_t n_background_domains = 40;
  std::size_t genes_per_feature = 10;
};

/// GO-BP primary domains plus KEGG/Reactome/STRING/TRRUST terms and ranked
/// gene lists for every basis feature of a planted model.
AnnotationCatalog make_planted_catalog(const LayeredModel& model, const CatalogFixtureOptions& options);

/// Default cascades shared between conditions, and extra immune-flavoured
/// ones for a multi-tissue condition.
std::vector<DomainKey> shared_cascades();
std::vector<DomainKey> immune_cascades();

/// Gene sets per domain for the known-biology reference graph.
std::map<std::string, std::vector<std::string>> make_domain_genes(const AnnotationCatalog& catalog, std::uint64_t seed);

KeywordSets default_tissue_keywords();
KeywordSets default_disease_keywords();

/// Knockdown log-fold changes driven by the planted influence of each
/// perturbed gene's direction on each response gene's direction, plus noise.
PerturbationTable make_perturbation_table(const LayeredModel& model, std::uint64_t seed, int n_perturbed = 24,
                                          int responses_per_gene = 40);

// ---------------------------------------------------------------------------
// Oracle fixtures

struct CoherenceFixture {
  AnnotationCatalog catalog;
  CircuitGraph graph;
};

/// Random catalog (some features unannotated) and a random edge set.
CoherenceFixture make_coherence_fixture(std::uint64_t seed, int n_edges = 10000);

/// Two model groups whose domain pairs are drawn independently (i.i.d.
/// source and target domains).
std::vector<ModelGroup> make_null_consensus_groups(std::uint64_t seed, int n_domains = 100, int edges_per_group = 2000);
/// Same, plus n_shared random pairs added once to both groups.
std::vector<ModelGroup> make_planted_consensus_groups(std::uint64_t seed, int n_domains = 100, int edges_per_group = 2000,
                                                      int n_shared = 600);

struct ValidationFixture {
  std::vector<GenePair> predictions;
  PerturbationTable measured;    // responses unrelated to the predictions
  PerturbationTable shuffled;    // LFC values of `measured` permuted across rows
  PerturbationTable concordant;  // LFC = predicted sign * strength for every prediction
};

ValidationFixture make_validation_fixture(std::uint64_t seed, int n_sources = 200, int targets_per_source = 10,
                                          int responses_per_source = 60);

}  // namespace circuits
