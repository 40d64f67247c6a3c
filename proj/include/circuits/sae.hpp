// SPDX-License-Identifier: Apache-2.0
//
// TopK sparse autoencoder dictionaries.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <vector>

#include "circuits/common.hpp"

namespace circuits {

/// Sparse TopK code. Indices are strictly increasing, values positive.
struct SparseCode {
  std::vector<int> indices;
  std::vector<float> values;
  int n_features = 0;

  /// Activation of feature `f`, 0 when inactive.
  float value_of(int f) const;
  std::vector<float> dense() const;
  std::size_t size() const { return indices.size(); }
};

class SaeDictionary {
 public:
  SaeDictionary() = default;
  SaeDictionary(int layer, int k, Matrix w_enc, std::vector<float> b_enc, Matrix w_dec, std::vector<float> b_dec);

  int layer() const { return layer_; }
  int d_model() const { return w_dec_.rows(); }
  int n_features() const { return w_enc_.rows(); }
  int k() const { return k_; }

  const Matrix& w_enc() const { return w_enc_; }  // [F x d]
  const std::vector<float>& b_enc() const { return b_enc_; }
  const Matrix& w_dec() const { return w_dec_; }  // [d x F]
  const std::vector<float>& b_dec() const { return b_dec_; }

  /// Decoder column f as a contiguous vector.
  std::span<const float> decoder_column(int f) const;

  /// max over columns of | ||W_dec[:, f]|| - 1 |.
  double max_column_norm_error() const;
  std::uint64_t fingerprint() const;

  void save(const std::filesystem::path& manifest) const;
  static SaeDictionary load(const std::filesystem::path& manifest);

 private:
  friend struct SaeTrainer;
  void rebuild_columns();
  void validate() const;

  int layer_ = 0;
  int k_ = 0;
  Matrix w_enc_;
  std::vector<float> b_enc_;
  Matrix w_dec_;
  std::vector<float> b_dec_;
  Matrix columns_;  // [F x d], transposed copy of w_dec_ for contiguous column access
};

/// Rectify the pre-activations W_enc h + b_enc, then keep the k largest
/// positive values (ties resolved toward the lower index).
SparseCode encode(const SaeDictionary& sae, std::span<const float> h);

/// W_dec z + b_dec.
std::vector<float> decode(const SaeDictionary& sae, const SparseCode& z);

enum class SaeInit { Orthonormal, Random };

/// Seeded random orthonormal basis, returned as a [d x d] matrix whose
/// columns are the directions.
Matrix random_orthonormal_basis(std::uint64_t seed, int d);

/// Seeded signed permutation of the standard basis. Projections and
/// ablations against it are exact in float arithmetic.
Matrix random_signed_permutation_basis(std::uint64_t seed, int d);

/// Dictionary whose first basis.cols() decoder columns are the given
/// orthonormal directions. The remaining columns are random unit vectors
/// drawn from the negative orthant of the basis, so they stay silent on
/// states with non-negative basis coordinates. W_enc = W_dec^T, biases 0.
SaeDictionary sae_from_basis(const Matrix& basis, int n_features, int k, int layer, std::uint64_t seed);

/// Orthonormal mode: sae_from_basis over random_orthonormal_basis(seed, d)
/// (requires F >= d). Random mode: tied random unit columns.
SaeDictionary synthesize_sae(std::uint64_t seed, int d, int n_features, int k, SaeInit mode, int layer = 0);

struct SaeTrainOptions {
  int steps = 1000;
  double learning_rate = 1e-3;
  int batch_size = 32;
  std::uint64_t seed = 0;
  int layer = 0;
};

struct SaeTrainResult {
  SaeDictionary sae;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  /// Full-data loss after each completed epoch.
  std::vector<double> epoch_loss;
};

/// Mean squared reconstruction error over all rows of `activations`.
double reconstruction_loss(const SaeDictionary& sae, const Matrix& activations);

/// Adam on mean squared reconstruction error; gradients flow through the
/// k active units only and decoder columns are renormalised after every
/// step. Throws TrainingError if the loss becomes non-finite.
SaeTrainResult train_sae(const Matrix& activations, int n_features, int k, const SaeTrainOptions& options);

/// Per-layer dictionaries. Layers without an SAE are simply absent.
using SaeSet = std::map<int, SaeDictionary>;

}  // namespace circuits
