// SPDX-License-Identifier: Apache-2.0

#include "circuits/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

namespace circuits {

EdgeAccumulator welford_update(EdgeAccumulator acc, double x) {
  acc.push(x);
  return acc;
}

EdgeAccumulator welford_merge(const EdgeAccumulator& a, const EdgeAccumulator& b) {
  if (a.n == 0) return b;
  if (b.n == 0) return a;
  EdgeAccumulator out;
  out.n = a.n + b.n;
  const double na = static_cast<double>(a.n);
  const double nb = static_cast<double>(b.n);
  const double n = static_cast<double>(out.n);
  const double delta = b.mean - a.mean;
  out.mean = a.mean + delta * (nb / n);
  out.m2 = a.m2 + b.m2 + delta * delta * (na * nb / n);
  out.pos = a.pos + b.pos;
  out.neg = a.neg + b.neg;
  out.zero = a.zero + b.zero;
  return out;
}

EdgeEffect finalize(const EdgeAccumulator& acc) {
  if (acc.n < 2) throw InsufficientDataError("Cohen's d needs at least 2 observations");
  EdgeEffect e;
  e.n = acc.n;
  const double n = static_cast<double>(acc.n);
  if (acc.mean > 0.0) {
    e.consistency = static_cast<double>(acc.pos) / n;
  } else if (acc.mean < 0.0) {
    e.consistency = static_cast<double>(acc.neg) / n;
  }
  if (acc.mean == 0.0) {
    e.d = 0.0;
    e.consistency = 0.0;
    return e;
  }
  const double var = std::max(acc.m2, 0.0) / (n - 1.0);
  if (var == 0.0) {
    e.d = acc.mean > 0.0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
  } else {
    e.d = acc.mean / std::sqrt(var);
  }
  return e;
}

const char* to_string(TestMethod method) {
  switch (method) {
    case TestMethod::FisherExact: return "fisher-exact";
    case TestMethod::MannWhitneyExact: return "mann-whitney-exact";
    case TestMethod::MannWhitneyNormal: return "mann-whitney-normal";
    case TestMethod::Permutation: return "permutation";
    case TestMethod::SpearmanT: return "spearman-t";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Fisher

namespace {

using u128 = unsigned __int128;

// Binomial coefficients are exact in 128 bits up to n = 125.
constexpr int kExactFisherMaxN = 120;

const std::vector<std::vector<u128>>& pascal() {
  static const auto table = [] {
    std::vector<std::vector<u128>> t(kExactFisherMaxN + 1);
    for (int n = 0; n <= kExactFisherMaxN; ++n) {
      t[static_cast<std::size_t>(n)].assign(static_cast<std::size_t>(n) + 1, 1);
      for (int k = 1; k < n; ++k) {
        t[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)] =
            t[static_cast<std::size_t>(n) - 1][static_cast<std::size_t>(k) - 1] + t[static_cast<std::size_t>(n) - 1][static_cast<std::size_t>(k)];
      }
    }
    return t;
  }();
  return table;
}

double log_choose(std::int64_t n, std::int64_t k) {
  return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

}  // namespace

TestResult fisher_exact(const Table2x2& t) {
  const std::int64_t a = t[0][0], b = t[0][1], c = t[1][0], d = t[1][1];
  if (a < 0 || b < 0 || c < 0 || d < 0) throw ContractError("fisher_exact: negative count");

  TestResult res;
  res.method = TestMethod::FisherExact;
  const double ad = static_cast<double>(a) * static_cast<double>(d);
  const double bc = static_cast<double>(b) * static_cast<double>(c);
  if (bc == 0.0) {
    res.statistic = ad > 0.0 ? std::numeric_limits<double>::infinity() : std::numeric_limits<double>::quiet_NaN();
  } else {
    res.statistic = ad / bc;
  }

  const std::int64_t r1 = a + b, r2 = c + d, c1 = a + c, c2 = b + d;
  const std::int64_t n = r1 + r2;
  if (r1 == 0 || r2 == 0 || c1 == 0 || c2 == 0) {
    res.p_value = 1.0;
    return res;
  }
  const std::int64_t lo = std::max<std::int64_t>(0, c1 - r2);
  const std::int64_t hi = std::min(r1, c1);

  if (n <= kExactFisherMaxN) {
    const auto& C = pascal();
    auto weight = [&](std::int64_t x) {
      return C[static_cast<std::size_t>(r1)][static_cast<std::size_t>(x)] * C[static_cast<std::size_t>(r2)][static_cast<std::size_t>(c1 - x)];
    };
    const u128 observed = weight(a);
    u128 tail = 0;
    for (std::int64_t x = lo; x <= hi; ++x) {
      const u128 w = weight(x);
      if (w <= observed) tail += w;
    }
    const u128 total = C[static_cast<std::size_t>(n)][static_cast<std::size_t>(c1)];
    res.p_value = std::min(1.0, static_cast<double>(static_cast<long double>(tail) / static_cast<long double>(total)));
    return res;
  }

  const double log_total = log_choose(n, c1);
  auto logp = [&](std::int64_t x) { return log_choose(r1, x) + log_choose(r2, c1 - x) - log_total; };
  const double observed = logp(a);
  const double cutoff = observed + std::log1p(1e-7);
  double p = 0.0;
  for (std::int64_t x = lo; x <= hi; ++x) {
    const double lp = logp(x);
    if (lp <= cutoff) p += std::exp(lp);
  }
  res.p_value = std::clamp(p, 0.0, 1.0);
  return res;
}

// ---------------------------------------------------------------------------
// Ranks

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    const double r = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = r;
    i = j;
  }
  return ranks;
}

// ---------------------------------------------------------------------------
// Mann-Whitney

namespace {

constexpr int kExactMannWhitneyMaxN = 12;

// counts[u] = number of orderings of m x's and n y's whose U_x equals u.
std::vector<double> mann_whitney_null_counts(int m, int n) {
  // f[i][j] is the distribution for i x's and j y's.
  std::vector<std::vector<std::vector<double>>> f(static_cast<std::size_t>(m) + 1,
                                                  std::vector<std::vector<double>>(static_cast<std::size_t>(n) + 1));
  for (int i = 0; i <= m; ++i) {
    for (int j = 0; j <= n; ++j) {
      auto& cur = f[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      cur.assign(static_cast<std::size_t>(i * j) + 1, 0.0);
      if (i == 0 || j == 0) {
        cur[0] = 1.0;
        continue;
      }
      // Largest element is an x (beats all j y's) or a y.
      const auto& take_x = f[static_cast<std::size_t>(i) - 1][static_cast<std::size_t>(j)];
      const auto& take_y = f[static_cast<std::size_t>(i)][static_cast<std::size_t>(j) - 1];
      for (std::size_t u = 0; u < take_x.size(); ++u) cur[u + static_cast<std::size_t>(j)] += take_x[u];
      for (std::size_t u = 0; u < take_y.size(); ++u) cur[u] += take_y[u];
    }
  }
  return f[static_cast<std::size_t>(m)][static_cast<std::size_t>(n)];
}

}  // namespace

TestResult mann_whitney(std::span<const double> xs, std::span<const double> ys) {
  if (xs.empty() || ys.empty()) throw ContractError("mann_whitney needs two non-empty samples");
  const std::size_t nx = xs.size(), ny = ys.size(), n = nx + ny;

  std::vector<double> pooled(xs.begin(), xs.end());
  pooled.insert(pooled.end(), ys.begin(), ys.end());
  const auto ranks = average_ranks(pooled);
  double rank_sum_x = 0.0;
  for (std::size_t i = 0; i < nx; ++i) rank_sum_x += ranks[i];
  const double u = rank_sum_x - static_cast<double>(nx) * (static_cast<double>(nx) + 1.0) / 2.0;

  // Tie groups.
  std::vector<double> sorted = pooled;
  std::sort(sorted.begin(), sorted.end());
  double tie_term = 0.0;
  bool has_ties = false;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    if (t > 1.0) {
      has_ties = true;
      tie_term += t * t * t - t;
    }
    i = j;
  }

  TestResult res;
  res.statistic = u;
  if (n <= kExactMannWhitneyMaxN && !has_ties) {
    const auto counts = mann_whitney_null_counts(static_cast<int>(nx), static_cast<int>(ny));
    const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    const auto uu = static_cast<std::size_t>(std::llround(u));
    double lower = 0.0, upper = 0.0;
    for (std::size_t k = 0; k < counts.size(); ++k) {
      if (k <= uu) lower += counts[k];
      if (k >= uu) upper += counts[k];
    }
    res.method = TestMethod::MannWhitneyExact;
    res.p_value = std::min(1.0, 2.0 * std::min(lower, upper) / total);
    return res;
  }

  res.method = TestMethod::MannWhitneyNormal;
  res.approximate = true;
  const double dnx = static_cast<double>(nx), dny = static_cast<double>(ny), dn = static_cast<double>(n);
  const double mean = dnx * dny / 2.0;
  const double var = dnx * dny / 12.0 * ((dn + 1.0) - tie_term / (dn * (dn - 1.0)));
  if (!(var > 0.0)) {
    res.p_value = 1.0;
    return res;
  }
  const double z = std::max(0.0, std::abs(u - mean) - 0.5) / std::sqrt(var);
  res.p_value = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
  return res;
}

// ---------------------------------------------------------------------------
// Spearman

TestResult spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw ContractError("spearman: samples differ in length");
  if (xs.size() < 3) throw InsufficientDataError("spearman needs at least 3 pairs");
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw UndefinedCorrelationError("spearman: zero rank variance");
  const double rho = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);

  TestResult res;
  res.statistic = rho;
  res.method = TestMethod::SpearmanT;
  res.approximate = true;
  const double df = n - 2.0;
  if (std::abs(rho) >= 1.0) {
    res.p_value = 0.0;
    return res;
  }
  const double t = rho * std::sqrt(df / (1.0 - rho * rho));
  const boost::math::students_t dist(df);
  res.p_value = std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))), 0.0, 1.0);
  return res;
}

// ---------------------------------------------------------------------------

PermutationResult permutation_enrichment(double observed, const PermutationSampler& sampler, int n_perms,
                                         std::uint64_t seed) {
  if (n_perms < 1) throw ContractError("permutation test needs n_perms >= 1");
  Rng rng(mix_seed(seed, 0x9E7));
  double sum = 0.0;
  std::int64_t at_least = 0;
  for (int i = 0; i < n_perms; ++i) {
    const double s = sampler(rng);
    sum += s;
    if (s >= observed) ++at_least;
  }
  PermutationResult r;
  r.observed = observed;
  r.n_perms = n_perms;
  r.expected = sum / n_perms;
  r.fold = r.expected == 0.0 ? std::numeric_limits<double>::infinity() : observed / r.expected;
  r.p_value = (1.0 + static_cast<double>(at_least)) / (1.0 + n_perms);
  return r;
}

double ks_uniform_statistic(std::vector<double> samples) {
  if (samples.empty()) throw ContractError("KS statistic of an empty sample");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double x = std::clamp(samples[i], 0.0, 1.0);
    d = std::max({d, static_cast<double>(i + 1) / n - x, x - static_cast<double>(i) / n});
  }
  return d;
}

double median(std::vector<double> values) {
  if (values.empty()) throw ContractError("median of an empty sample");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double hi = values[mid];
  if (values.size() % 2 == 1) return hi;
  const double lo = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return (lo + hi) / 2.0;
}

}  // namespace circuits
