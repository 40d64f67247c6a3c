// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <limits>
#include <numeric>

#include <gtest/gtest.h>

#include "circuits/stats.hpp"

using namespace circuits;

namespace {

double two_pass_sd(const std::vector<double>& xs) {
  const double m = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

double log_choose(int n, int k) { return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0); }

// Sum of hypergeometric probabilities no larger than the observed one.
double fisher_oracle(int a, int b, int c, int d) {
  const int r1 = a + b, c1 = a + c, n = a + b + c + d;
  auto prob = [&](int x) { return std::exp(log_choose(c1, x) + log_choose(n - c1, r1 - x) - log_choose(n, r1)); };
  const double p_obs = prob(a);
  double p = 0.0;
  for (int x = std::max(0, r1 + c1 - n); x <= std::min(r1, c1); ++x) {
    const double px = prob(x);
    if (px <= p_obs * (1.0 + 1e-7)) p += px;
  }
  return std::min(1.0, p);
}

}  // namespace

TEST(Welford, MatchesTwoPassOnShiftedData) {
  Rng rng(1);
  std::vector<double> xs;
  EdgeAccumulator acc;
  for (int i = 0; i < 1000; ++i) {
    xs.push_back(1e6 + rng.normal());
    acc.push(xs.back());
  }
  const double m = std::accumulate(xs.begin(), xs.end(), 0.0) / 1000.0;
  EXPECT_NEAR(acc.mean, m, 1e-9 * m);
  EXPECT_NEAR(std::sqrt(acc.m2 / 999.0), two_pass_sd(xs), 1e-6);
  EXPECT_EQ(welford_update(EdgeAccumulator{}, 2.5).mean, 2.5);
}

TEST(Welford, MergeEqualsConcatenation) {
  Rng rng(2);
  EdgeAccumulator a, b, all;
  for (int i = 0; i < 300; ++i) {
    const double x = 0.3 + 2.0 * rng.normal();
    (i < 120 ? a : b).push(x);
    all.push(x);
  }
  const auto m = welford_merge(a, b);
  EXPECT_EQ(m.n, all.n);
  EXPECT_NEAR(m.mean, all.mean, 1e-12);
  EXPECT_NEAR(m.m2, all.m2, 1e-9 * all.m2);
  EXPECT_EQ(m.pos, all.pos);
  EXPECT_EQ(m.neg, all.neg);
  EXPECT_EQ(welford_merge(EdgeAccumulator{}, a), a);
}

TEST(Finalize, CohensDAndConsistency) {
  EdgeAccumulator acc;
  for (double x : {1.0, 2.0, 3.0, -1.0}) acc.push(x);
  const auto e = finalize(acc);
  const double sd = two_pass_sd({1.0, 2.0, 3.0, -1.0});
  EXPECT_NEAR(e.d, 1.25 / sd, 1e-12);
  EXPECT_DOUBLE_EQ(e.consistency, 0.75);
  EXPECT_EQ(e.n, 4);
}

TEST(Finalize, ZeroVarianceIsSignedInfinity) {
  EdgeAccumulator pos, neg, zero;
  for (int i = 0; i < 3; ++i) {
    pos.push(0.5);
    neg.push(-0.5);
    zero.push(0.0);
  }
  EXPECT_EQ(finalize(pos).d, std::numeric_limits<double>::infinity());
  EXPECT_EQ(finalize(neg).d, -std::numeric_limits<double>::infinity());
  EXPECT_EQ(finalize(zero).d, 0.0);
  EXPECT_EQ(finalize(zero).consistency, 0.0);
}

TEST(Finalize, TooFewObservationsIsInsufficientData) {
  EdgeAccumulator acc;
  acc.push(1.0);
  EXPECT_THROW(finalize(acc), InsufficientDataError);
}

TEST(Fisher, ClassicTeaTasting) {
  const auto r = fisher_exact({{{3, 1}, {1, 3}}});
  EXPECT_NEAR(r.p_value, 34.0 / 70.0, 1e-12);
  EXPECT_DOUBLE_EQ(r.statistic, 9.0);
  EXPECT_FALSE(r.approximate);
}

TEST(Fisher, MatchesHypergeometricOracle) {
  Rng rng(3);
  for (int t = 0; t < 400; ++t) {
    const int a = static_cast<int>(rng.below(30)), b = static_cast<int>(rng.below(30));
    const int c = static_cast<int>(rng.below(30)), d = static_cast<int>(rng.below(200));
    const auto r = fisher_exact({{{a, b}, {c, d}}});
    EXPECT_NEAR(r.p_value, fisher_oracle(a, b, c, d), 1e-9) << a << ' ' << b << ' ' << c << ' ' << d;
  }
}

TEST(Fisher, DegenerateTables) {
  EXPECT_DOUBLE_EQ(fisher_exact({{{0, 0}, {0, 0}}}).p_value, 1.0);
  EXPECT_EQ(fisher_exact({{{4, 0}, {0, 4}}}).statistic, std::numeric_limits<double>::infinity());
  EXPECT_THROW(fisher_exact({{{-1, 0}, {0, 4}}}), ContractError);
}

TEST(MannWhitney, ExactSmallSample) {
  const std::vector<double> xs{1, 2, 3}, ys{4, 5, 6};
  const auto r = mann_whitney(xs, ys);
  EXPECT_EQ(r.method, TestMethod::MannWhitneyExact);
  EXPECT_DOUBLE_EQ(r.statistic, 0.0);
  EXPECT_NEAR(r.p_value, 0.1, 1e-12);
}

TEST(MannWhitney, UCountsPairsWithTiesAsHalf) {
  Rng rng(4);
  std::vector<double> xs, ys;
  for (int i = 0; i < 25; ++i) xs.push_back(std::round((0.5 + rng.normal()) * 2.0));
  for (int i = 0; i < 30; ++i) ys.push_back(std::round(rng.normal() * 2.0));
  double u = 0.0;
  for (double x : xs) {
    for (double y : ys) u += x > y ? 1.0 : (x == y ? 0.5 : 0.0);
  }
  const auto r = mann_whitney(xs, ys);
  EXPECT_EQ(r.method, TestMethod::MannWhitneyNormal);
  EXPECT_TRUE(r.approximate);
  EXPECT_DOUBLE_EQ(r.statistic, u);
  EXPECT_GT(r.p_value, 0.0);
  EXPECT_LE(r.p_value, 1.0);
}

TEST(MannWhitney, AllTiedGivesPValueOne) {
  const std::vector<double> xs(8, 1.0), ys(9, 1.0);
  EXPECT_DOUBLE_EQ(mann_whitney(xs, ys).p_value, 1.0);
  EXPECT_THROW(mann_whitney(std::vector<double>{}, ys), ContractError);
}

TEST(Ranks, TiesShareAveragePosition) {
  const std::vector<double> v{10, 20, 20, 30, 5};
  EXPECT_EQ(average_ranks(v), (std::vector<double>{2, 3.5, 3.5, 5, 1}));
}

TEST(Spearman, KnownExample) {
  const std::vector<double> xs{1, 2, 3, 4, 5}, ys{2, 1, 4, 3, 5};
  const auto r = spearman(xs, ys);
  EXPECT_NEAR(r.statistic, 0.8, 1e-12);
  EXPECT_NEAR(r.p_value, 0.1041, 1e-3);
}

TEST(Spearman, PerfectAndUndefined) {
  const std::vector<double> xs{1, 2, 3, 4}, rev{9, 7, 5, 1}, flat{2, 2, 2, 2};
  EXPECT_DOUBLE_EQ(spearman(xs, rev).statistic, -1.0);
  EXPECT_THROW(spearman(xs, flat), UndefinedCorrelationError);
  EXPECT_THROW(spearman(std::vector<double>{1, 2}, std::vector<double>{1, 2}), InsufficientDataError);
}

TEST(Permutation, AddOnePValueAndFold) {
  const auto r = permutation_enrichment(5.0, [](Rng&) { return 2.0; }, 99, 1);
  EXPECT_DOUBLE_EQ(r.p_value, 0.01);
  EXPECT_DOUBLE_EQ(r.expected, 2.0);
  EXPECT_DOUBLE_EQ(r.fold, 2.5);
  EXPECT_EQ(r.n_perms, 99);

  const auto tie = permutation_enrichment(2.0, [](Rng&) { return 2.0; }, 9, 1);
  EXPECT_DOUBLE_EQ(tie.p_value, 1.0);

  const auto zero = permutation_enrichment(1.0, [](Rng&) { return 0.0; }, 9, 1);
  EXPECT_EQ(zero.fold, std::numeric_limits<double>::infinity());
  EXPECT_THROW(permutation_enrichment(1.0, [](Rng&) { return 0.0; }, 0, 1), ContractError);
}

TEST(Permutation, SeededSamplerIsReproducible) {
  auto sampler = [](Rng& r) { return r.uniform(); };
  const auto a = permutation_enrichment(0.9, sampler, 200, 11);
  const auto b = permutation_enrichment(0.9, sampler, 200, 11);
  EXPECT_EQ(a.p_value, b.p_value);
  EXPECT_EQ(a.expected, b.expected);
}

TEST(Ks, UniformStatistic) {
  EXPECT_DOUBLE_EQ(ks_uniform_statistic({0.5}), 0.5);
  EXPECT_DOUBLE_EQ(ks_uniform_statistic({0.75, 0.25}), 0.25);
  Rng rng(6);
  std::vector<double> u(5000);
  for (auto& x : u) x = rng.uniform();
  EXPECT_LT(ks_uniform_statistic(u), 1.36 / std::sqrt(5000.0));
  EXPECT_THROW(ks_uniform_statistic({}), ContractError);
}

TEST(Median, OddEvenEmpty) {
  EXPECT_DOUBLE_EQ(median({3, 1, 2}), 2.0);
  EXPECT_DOUBLE_EQ(median({4, 1, 3, 2}), 2.5);
  EXPECT_THROW(median({}), ContractError);
}

TEST(WorkedExamples, SmallClosedForms) {
  EdgeAccumulator acc;
  for (double x : {2, 4, 4, 4, 5, 5, 7, 9}) acc.push(x);
  EXPECT_DOUBLE_EQ(acc.mean, 5.0);
  EXPECT_NEAR(acc.m2 / 7.0, 32.0 / 7.0, 1e-12);

  const std::vector<double> xs{1, 2}, ys{3, 4};
  EXPECT_NEAR(mann_whitney(xs, ys).p_value, 1.0 / 3.0, 1e-12);

  const std::vector<double> a{1, 2, 3}, b{3, 1, 2};
  EXPECT_NEAR(spearman(a, b).statistic, -0.5, 1e-12);
}
