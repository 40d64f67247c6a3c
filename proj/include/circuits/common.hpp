// SPDX-License-Identifier: Apache-2.0
//
// Shared vocabulary types: feature identities, error hierarchy, a dense
// row-major float matrix and a portable seeded RNG.

#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace circuits {

// ---------------------------------------------------------------------------
// Errors. The CLI maps ConfigError -> exit 2 and NumericError -> exit 3.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid dimensions, thresholds, files or mismatched resume state.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values produced during a forward pass or training.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// A caller violated an operation's precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public NumericError {
 public:
  using NumericError::NumericError;
};

/// Malformed input file.
class FormatError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// ---------------------------------------------------------------------------

/// Node identity in a circuit graph. Text form is "L<layer>_F<index>",
/// prefixed by "M<model>:" when the model id is non-zero.
struct FeatureId {
  int model = 0;
  int layer = 0;
  int index = 0;

  auto operator<=>(const FeatureId&) const = default;

  std::string str() const;
  static FeatureId parse(std::string_view text);
};

struct FeatureIdHash {
  std::size_t operator()(const FeatureId& f) const noexcept {
    std::uint64_t h = static_cast<std::uint32_t>(f.model);
    h = h * 0x9E3779B97F4A7C15ULL + static_cast<std::uint32_t>(f.layer);
    h = h * 0x9E3779B97F4A7C15ULL + static_cast<std::uint32_t>(f.index);
    return static_cast<std::size_t>(h ^ (h >> 29));
  }
};

// ---------------------------------------------------------------------------

/// Dense row-major float matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, float fill = 0.0f)
      : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  float& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  float operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }

  std::span<float> row(int r) {
    return {data_.data() + static_cast<std::size_t>(r) * cols_, static_cast<std::size_t>(cols_)};
  }
  std::span<const float> row(int r) const {
    return {data_.data() + static_cast<std::size_t>(r) * cols_, static_cast<std::size_t>(cols_)};
  }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<float> data_;
};

bool all_finite(std::span<const float> values);

// ---------------------------------------------------------------------------

/// Seeded generator with platform-independent derived distributions
/// (std:: distributions are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  double normal();

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Derive an independent stream seed from a base seed and a tag.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag);

/// FNV-1a, used for config and content fingerprints that must be stable
/// across runs and platforms.
class Fingerprint {
 public:
  Fingerprint& add(std::string_view text);
  Fingerprint& add(std::span<const float> values);
  Fingerprint& add(std::int64_t value);
  Fingerprint& add(double value);
  std::uint64_t value() const { return hash_; }
  std::string hex() const;
  static std::string to_hex(std::uint64_t value);

 private:
  void bytes(const void* data, std::size_t n);
  std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

}  // namespace circuits
