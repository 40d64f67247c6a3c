// SPDX-License-Identifier: Apache-2.0
//
// Streaming and exact statistics used by the tracer and the downstream
// analyses.

#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "circuits/common.hpp"

namespace circuits {

/// Welford state for one source -> target pair, plus sign counters.
struct EdgeAccumulator {
  std::int64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;
  std::int64_t pos = 0;
  std::int64_t neg = 0;
  std::int64_t zero = 0;

  void push(double x) {
    ++n;
    const double delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (x - mean);
    if (x > 0.0) {
      ++pos;
    } else if (x < 0.0) {
      ++neg;
    } else {
      ++zero;
    }
  }

  bool operator==(const EdgeAccumulator&) const = default;
};

EdgeAccumulator welford_update(EdgeAccumulator acc, double x);
/// Combines two partial accumulators as if their streams were concatenated.
EdgeAccumulator welford_merge(const EdgeAccumulator& a, const EdgeAccumulator& b);

struct EdgeEffect {
  double d = 0.0;            // Cohen's d; +/-inf when variance is zero and the mean is not
  double consistency = 0.0;  // fraction of cells whose delta has the sign of the mean
  std::int64_t n = 0;
};

/// Cohen's d = mean / sample sd, and sign consistency. Throws
/// InsufficientDataError when n < 2.
EdgeEffect finalize(const EdgeAccumulator& acc);

// ---------------------------------------------------------------------------

enum class TestMethod { FisherExact, MannWhitneyExact, MannWhitneyNormal, Permutation, SpearmanT };

const char* to_string(TestMethod method);

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  TestMethod method = TestMethod::FisherExact;
  bool approximate = false;
};

/// 2x2 contingency table {{a, b}, {c, d}}.
using Table2x2 = std::array<std::array<std::int64_t, 2>, 2>;

/// Two-sided Fisher exact test; statistic is the odds ratio ad/bc.
TestResult fisher_exact(const Table2x2& table);

/// Mann-Whitney U for xs against ys (U_x counts pairs with x > y, ties
/// credited 0.5). Exact null enumeration when nx + ny <= 12 with no ties,
/// otherwise the normal approximation with tie and continuity correction.
TestResult mann_whitney(std::span<const double> xs, std::span<const double> ys);

/// Average ranks (1-based), ties share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

class UndefinedCorrelationError : public InsufficientDataError {
 public:
  using InsufficientDataError::InsufficientDataError;
};

/// Spearman rho with a Student-t p-value (approximate).
TestResult spearman(std::span<const double> xs, std::span<const double> ys);

struct PermutationResult {
  double observed = 0.0;
  double expected = 0.0;
  double fold = 0.0;  // +inf when expected == 0
  double p_value = 1.0;
  int n_perms = 0;
};

/// Draws one statistic under a label permutation.
using PermutationSampler = std::function<double(Rng&)>;

/// p = (1 + #{permuted >= observed}) / (1 + n_perms).
PermutationResult permutation_enrichment(double observed, const PermutationSampler& sampler, int n_perms,
                                         std::uint64_t seed);

/// One-sample Kolmogorov-Smirnov statistic against Uniform(0, 1).
double ks_uniform_statistic(std::vector<double> samples);

/// Median of a non-empty sample.
double median(std::vector<double> values);

}  // namespace circuits
