// SPDX-License-Identifier: Apache-2.0
//
// Layered models whose per-layer hidden states are traced: a small
// deterministic pre-norm transformer and a planted-dependency linear model
// with a known causal structure.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <variant>
#include <vector>

#include "circuits/common.hpp"

namespace circuits {

// ---------------------------------------------------------------------------
// Cells

/// One tokenised cell. `padding[i] != 0` marks a padded position.
struct Cell {
  int cell_id = 0;
  int cluster = 0;
  std::vector<std::int32_t> tokens;
  std::vector<float> values;
  std::vector<std::uint8_t> padding;

  int valid_positions() const;
};

struct CellBatch {
  int seq_len = 0;
  std::vector<Cell> cells;

  /// Throws ContractError unless every cell has seq_len positions and
  /// finite values.
  void validate() const;
  std::uint64_t fingerprint() const;

  void save(const std::filesystem::path& path) const;
  static CellBatch load(const std::filesystem::path& path);
};

enum class CellKind { K562Like, MultiTissueLike };

inline constexpr std::int32_t kPadToken = 0;

/// Synthetic cells: each cell draws distinct tokens (genes) without
/// replacement, sorted by descending value, then pads to seq_len.
/// Multi-tissue-like cells come from `n_clusters` latent clusters of
/// near-equal size with distinct token and value distributions.
CellBatch generate_cells(std::uint64_t seed, int n_cells, int seq_len, int vocab, CellKind kind,
                         int n_clusters = 3);

// ---------------------------------------------------------------------------
// Hidden states

struct HiddenState {
  int layer = 0;
  Matrix states;  // [positions x d_model]
};

// ---------------------------------------------------------------------------
// Parameters

struct ToyBlock {
  std::vector<float> ln1_gain, ln1_bias;
  Matrix wq, wk, wv, wo;  // [d x d], y = W x
  std::vector<float> ln2_gain, ln2_bias;
  Matrix w1;  // [4d x d]
  std::vector<float> b1;
  Matrix w2;  // [d x 4d]
  std::vector<float> b2;
};

struct ToyTransformerParams {
  int n_heads = 1;
  Matrix token_embedding;     // [vocab x d]
  std::vector<float> value_embedding;  // [d]
  Matrix position_embedding;  // [max_seq_len x d]
  std::vector<ToyBlock> blocks;
};

struct PlantedEdge {
  FeatureId source;
  FeatureId target;
  double weight = 0.0;
};

/// Ground-truth circuit for a planted-linear model. `bases[l]` is a
/// [d x n_dirs] matrix whose columns are the layer's orthonormal decoder
/// directions.
struct PlantedSpec {
  std::vector<PlantedEdge> edges;
  std::vector<Matrix> bases;

  /// Checks layer ordering, weights and basis orthonormality.
  void validate(int n_layers, int d_model) const;
};

/// One rank-one term of a planted transition: h' += weight * <h, read> * write.
struct PlantedTerm {
  std::vector<float> read;
  std::vector<float> write;
  float weight = 0.0f;
};

struct PlantedParams {
  PlantedSpec spec;
  Matrix token_embedding;  // [vocab x d]
  /// transitions[l] holds the terms applied when moving into layer l
  /// (transitions[0] is always empty: layer 0 is the embedding itself).
  std::vector<std::vector<PlantedTerm>> transitions;
};

enum class ModelKind { ToyTransformer, PlantedLinear };

const char* to_string(ModelKind kind);

class LayeredModel {
 public:
  LayeredModel(ModelKind kind, int n_layers, int d_model, int vocab, int max_seq_len, std::uint64_t seed,
               std::variant<ToyTransformerParams, PlantedParams> params);

  ModelKind kind() const { return kind_; }
  int n_layers() const { return n_layers_; }
  int d_model() const { return d_model_; }
  int vocab() const { return vocab_; }
  int max_seq_len() const { return max_seq_len_; }
  std::uint64_t seed() const { return seed_; }

  const ToyTransformerParams* toy() const { return std::get_if<ToyTransformerParams>(&params_); }
  const PlantedParams* planted() const { return std::get_if<PlantedParams>(&params_); }

  /// Input representation of a cell, before layer 0.
  Matrix embed(const Cell& cell) const;
  /// Applies layer `layer` in place. Padded positions are propagated but
  /// never attended to.
  void apply_layer(int layer, Matrix& states, std::span<const std::uint8_t> padding) const;

  std::uint64_t fingerprint() const;

  void save(const std::filesystem::path& manifest) const;
  static LayeredModel load(const std::filesystem::path& manifest);

 private:
  ModelKind kind_;
  int n_layers_;
  int d_model_;
  int vocab_;
  int max_seq_len_;
  std::uint64_t seed_;
  std::variant<ToyTransformerParams, PlantedParams> params_;
};

// ---------------------------------------------------------------------------
// Builders and passes

LayeredModel build_toy_transformer(std::uint64_t seed, int n_layers, int d_model, int n_heads,
                                   int vocab = 256, int max_seq_len = 256);

/// Planted-linear model: the transition into layer l+1 is
///   h' = h + sum over planted (s@l -> t@l+1) of w <h, dir_s> dir_t
/// and the identity otherwise. Edges spanning several layers are routed
/// through relay directions taken from the top of the intermediate
/// layer's basis. Each token embeds onto one layer-0 basis direction,
/// scaled by its value.
LayeredModel build_planted_model(const PlantedSpec& spec, int n_layers, int d_model, std::uint64_t seed,
                                 int vocab = 256, int max_seq_len = 256);

/// Hidden state at the output of every layer 0..L-1.
std::vector<HiddenState> forward_clean(const LayeredModel& model, const Cell& cell);
std::vector<std::vector<HiddenState>> forward_clean(const LayeredModel& model, const CellBatch& batch);

/// Propagates `state` (the output of `start_layer`) through layers
/// start_layer+1..L-1. Replaying a clean state reproduces forward_clean
/// bit-exactly.
std::vector<HiddenState> forward_from(const LayeredModel& model, int start_layer, const HiddenState& state,
                                      std::span<const std::uint8_t> padding);

}  // namespace circuits
