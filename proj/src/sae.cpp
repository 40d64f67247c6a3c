// SPDX-License-Identifier: Apache-2.0

#include "circuits/sae.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "circuits/blob_io.hpp"

namespace circuits {

float SparseCode::value_of(int f) const {
  auto it = std::lower_bound(indices.begin(), indices.end(), f);
  if (it == indices.end() || *it != f) return 0.0f;
  return values[static_cast<std::size_t>(it - indices.begin())];
}

std::vector<float> SparseCode::dense() const {
  std::vector<float> out(static_cast<std::size_t>(n_features), 0.0f);
  for (std::size_t i = 0; i < indices.size(); ++i) out[static_cast<std::size_t>(indices[i])] = values[i];
  return out;
}

SaeDictionary::SaeDictionary(int layer, int k, Matrix w_enc, std::vector<float> b_enc, Matrix w_dec,
                             std::vector<float> b_dec)
    : layer_(layer),
      k_(k),
      w_enc_(std::move(w_enc)),
      b_enc_(std::move(b_enc)),
      w_dec_(std::move(w_dec)),
      b_dec_(std::move(b_dec)) {
  validate();
  rebuild_columns();
}

void SaeDictionary::validate() const {
  const int F = w_enc_.rows();
  const int d = w_enc_.cols();
  if (F < 1 || d < 1) throw ConfigError("SAE dimensions must be positive");
  if (k_ < 1 || k_ > F) throw ConfigError("SAE k must satisfy 1 <= k <= F");
  if (w_dec_.rows() != d || w_dec_.cols() != F || static_cast<int>(b_enc_.size()) != F ||
      static_cast<int>(b_dec_.size()) != d) {
    throw ConfigError("SAE parameter shapes are inconsistent");
  }
  if (!all_finite(w_enc_.data()) || !all_finite(w_dec_.data()) || !all_finite(b_enc_) || !all_finite(b_dec_)) {
    throw NumericError("SAE parameters contain non-finite values");
  }
}

void SaeDictionary::rebuild_columns() {
  const int F = w_dec_.cols();
  const int d = w_dec_.rows();
  columns_ = Matrix(F, d);
  for (int r = 0; r < d; ++r) {
    for (int f = 0; f < F; ++f) columns_(f, r) = w_dec_(r, f);
  }
}

std::span<const float> SaeDictionary::decoder_column(int f) const {
  if (f < 0 || f >= n_features()) throw ContractError("feature index out of range");
  return columns_.row(f);
}

double SaeDictionary::max_column_norm_error() const {
  double worst = 0.0;
  for (int f = 0; f < n_features(); ++f) {
    double sq = 0.0;
    for (float v : columns_.row(f)) sq += static_cast<double>(v) * v;
    worst = std::max(worst, std::abs(std::sqrt(sq) - 1.0));
  }
  return worst;
}

std::uint64_t SaeDictionary::fingerprint() const {
  return Fingerprint()
      .add(std::int64_t{layer_})
      .add(std::int64_t{k_})
      .add(w_enc_.data())
      .add(b_enc_)
      .add(w_dec_.data())
      .add(b_dec_)
      .value();
}

void SaeDictionary::save(const std::filesystem::path& manifest) const {
  TensorBundle bundle;
  const int F = n_features();
  const int d = d_model();
  bundle.meta = {{"format", "circuits-sae"}, {"layer", layer_}, {"d_model", d}, {"n_features", F}, {"k", k_}};
  bundle.put("w_enc", {F, d}, w_enc_.data());
  bundle.put("b_enc", {F}, b_enc_);
  bundle.put("w_dec", {d, F}, w_dec_.data());
  bundle.put("b_dec", {d}, b_dec_);
  bundle.save(manifest);
}

SaeDictionary SaeDictionary::load(const std::filesystem::path& manifest) {
  const auto bundle = TensorBundle::load(manifest);
  try {
    if (bundle.meta.value("format", "") != "circuits-sae") throw FormatError(manifest.string() + " is not an SAE manifest");
    const int layer = bundle.meta.at("layer").get<int>();
    const int d = bundle.meta.at("d_model").get<int>();
    const int F = bundle.meta.at("n_features").get<int>();
    const int k = bundle.meta.at("k").get<int>();
    Matrix w_enc(F, d), w_dec(d, F);
    const auto& we = bundle.get("w_enc", {F, d});
    const auto& wd = bundle.get("w_dec", {d, F});
    std::copy(we.begin(), we.end(), w_enc.data().begin());
    std::copy(wd.begin(), wd.end(), w_dec.data().begin());
    return SaeDictionary(layer, k, std::move(w_enc), bundle.get("b_enc", {F}), std::move(w_dec), bundle.get("b_dec", {d}));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(manifest.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------

SparseCode encode(const SaeDictionary& sae, std::span<const float> h) {
  const int F = sae.n_features();
  const int d = sae.d_model();
  if (static_cast<int>(h.size()) != d) throw ContractError("encode: input length != d_model");

  const Matrix& w = sae.w_enc();
  const auto& b = sae.b_enc();
  std::vector<std::pair<float, int>> active;
  active.reserve(static_cast<std::size_t>(sae.k()) * 2);
  for (int f = 0; f < F; ++f) {
    const auto row = w.row(f);
    float acc = b[static_cast<std::size_t>(f)];
    for (int c = 0; c < d; ++c) acc += row[static_cast<std::size_t>(c)] * h[static_cast<std::size_t>(c)];
    if (acc > 0.0f) active.emplace_back(acc, f);
  }
  auto better = [](const std::pair<float, int>& a, const std::pair<float, int>& b) {
    return a.first > b.first || (a.first == b.first && a.second < b.second);
  };
  const auto keep = std::min<std::size_t>(active.size(), static_cast<std::size_t>(sae.k()));
  std::partial_sort(active.begin(), active.begin() + static_cast<std::ptrdiff_t>(keep), active.end(), better);
  active.resize(keep);
  std::sort(active.begin(), active.end(), [](const auto& a, const auto& b) { return a.second < b.second; });

  SparseCode z;
  z.n_features = F;
  z.indices.reserve(keep);
  z.values.reserve(keep);
  for (const auto& [v, f] : active) {
    z.indices.push_back(f);
    z.values.push_back(v);
  }
  return z;
}

std::vector<float> decode(const SaeDictionary& sae, const SparseCode& z) {
  if (z.n_features != sae.n_features()) throw ContractError("decode: code size != dictionary size");
  std::vector<float> out = sae.b_dec();
  for (std::size_t i = 0; i < z.indices.size(); ++i) {
    const auto col = sae.decoder_column(z.indices[i]);
    const float v = z.values[i];
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += v * col[c];
  }
  return out;
}

// ---------------------------------------------------------------------------

Matrix random_orthonormal_basis(std::uint64_t seed, int d) {
  if (d < 1) throw ConfigError("basis dimension must be positive");
  Rng rng(mix_seed(seed, 0x0B5));
  // Modified Gram-Schmidt on a Gaussian matrix, in double precision.
  std::vector<std::vector<double>> cols(static_cast<std::size_t>(d), std::vector<double>(static_cast<std::size_t>(d)));
  for (auto& c : cols) {
    for (auto& v : c) v = rng.normal();
  }
  for (int j = 0; j < d; ++j) {
    auto& cj = cols[static_cast<std::size_t>(j)];
    for (int pass = 0; pass < 2; ++pass) {
      for (int i = 0; i < j; ++i) {
        const auto& ci = cols[static_cast<std::size_t>(i)];
        const double dot = std::inner_product(cj.begin(), cj.end(), ci.begin(), 0.0);
        for (int r = 0; r < d; ++r) cj[static_cast<std::size_t>(r)] -= dot * ci[static_cast<std::size_t>(r)];
      }
    }
    const double norm = std::sqrt(std::inner_product(cj.begin(), cj.end(), cj.begin(), 0.0));
    for (auto& v : cj) v /= norm;
  }
  Matrix q(d, d);
  for (int j = 0; j < d; ++j) {
    for (int r = 0; r < d; ++r) q(r, j) = static_cast<float>(cols[static_cast<std::size_t>(j)][static_cast<std::size_t>(r)]);
  }
  return q;
}

namespace {

void normalise_columns(Matrix& w_dec) {
  for (int f = 0; f < w_dec.cols(); ++f) {
    double sq = 0.0;
    for (int r = 0; r < w_dec.rows(); ++r) sq += static_cast<double>(w_dec(r, f)) * w_dec(r, f);
    const double norm = std::sqrt(sq);
    if (norm == 0.0) throw NumericError("decoder column " + std::to_string(f) + " has zero norm");
    for (int r = 0; r < w_dec.rows(); ++r) w_dec(r, f) = static_cast<float>(w_dec(r, f) / norm);
  }
}

Matrix transpose(const Matrix& m) {
  Matrix t(m.cols(), m.rows());
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) t(c, r) = m(r, c);
  }
  return t;
}

}  // namespace

Matrix random_signed_permutation_basis(std::uint64_t seed, int d) {
  if (d < 1) throw ConfigError("basis dimension must be positive");
  Rng rng(mix_seed(seed, 0x5B9));
  std::vector<int> perm(static_cast<std::size_t>(d));
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(std::span<int>(perm));
  Matrix q(d, d);
  for (int j = 0; j < d; ++j) q(perm[static_cast<std::size_t>(j)], j) = rng.uniform() < 0.5 ? -1.0f : 1.0f;
  return q;
}

SaeDictionary sae_from_basis(const Matrix& basis, int n_features, int k, int layer, std::uint64_t seed) {
  const int d = basis.rows();
  const int n_dirs = basis.cols();
  if (n_features < n_dirs) throw ConfigError("orthonormal SAE needs F >= number of basis directions");
  Matrix w_dec(d, n_features);
  for (int f = 0; f < n_dirs; ++f) {
    for (int r = 0; r < d; ++r) w_dec(r, f) = basis(r, f);
  }
  Rng rng(mix_seed(seed, 0x5AE0 + static_cast<std::uint64_t>(layer)));
  std::vector<double> coeff(static_cast<std::size_t>(n_dirs));
  for (int f = n_dirs; f < n_features; ++f) {
    double sq = 0.0;
    for (auto& c : coeff) {
      c = -std::abs(rng.normal());
      sq += c * c;
    }
    const double norm = std::sqrt(sq);
    for (int r = 0; r < d; ++r) {
      double v = 0.0;
      for (int j = 0; j < n_dirs; ++j) v += coeff[static_cast<std::size_t>(j)] / norm * basis(r, j);
      w_dec(r, f) = static_cast<float>(v);
    }
  }
  normalise_columns(w_dec);
  Matrix w_enc = transpose(w_dec);
  return SaeDictionary(layer, k, std::move(w_enc), std::vector<float>(static_cast<std::size_t>(n_features), 0.0f),
                       std::move(w_dec), std::vector<float>(static_cast<std::size_t>(d), 0.0f));
}

SaeDictionary synthesize_sae(std::uint64_t seed, int d, int n_features, int k, SaeInit mode, int layer) {
  if (d < 1 || n_features < 1) throw ConfigError("SAE dimensions must be positive");
  if (k < 1 || k > n_features) throw ConfigError("SAE k must satisfy 1 <= k <= F");
  if (mode == SaeInit::Orthonormal) {
    if (n_features < d) throw ConfigError("orthonormal SAE requires F >= d");
    return sae_from_basis(random_orthonormal_basis(seed, d), n_features, k, layer, seed);
  }
  Rng rng(mix_seed(seed, 0x5AE1 + static_cast<std::uint64_t>(layer)));
  Matrix w_dec(d, n_features);
  for (auto& v : w_dec.data()) v = static_cast<float>(rng.normal());
  normalise_columns(w_dec);
  Matrix w_enc = transpose(w_dec);
  return SaeDictionary(layer, k, std::move(w_enc), std::vector<float>(static_cast<std::size_t>(n_features), 0.0f),
                       std::move(w_dec), std::vector<float>(static_cast<std::size_t>(d), 0.0f));
}

// ---------------------------------------------------------------------------
// Training

double reconstruction_loss(const SaeDictionary& sae, const Matrix& activations) {
  if (activations.rows() == 0) return 0.0;
  double total = 0.0;
  for (int i = 0; i < activations.rows(); ++i) {
    const auto h = activations.row(i);
    const auto rec = decode(sae, encode(sae, h));
    for (std::size_t c = 0; c < rec.size(); ++c) {
      const double r = static_cast<double>(rec[c]) - h[c];
      total += r * r;
    }
  }
  return total / (static_cast<double>(activations.rows()) * activations.cols());
}

struct SaeTrainer {
  // Adam state over a flat view of [w_enc | b_enc | w_dec | b_dec].
  struct Moments {
    std::vector<double> m, v;
    explicit Moments(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
  };

  static void adam(std::span<float> param, std::span<const double> grad, Moments& mom, double lr, int t) {
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    const double c1 = 1.0 - std::pow(beta1, t);
    const double c2 = 1.0 - std::pow(beta2, t);
    for (std::size_t i = 0; i < param.size(); ++i) {
      mom.m[i] = beta1 * mom.m[i] + (1.0 - beta1) * grad[i];
      mom.v[i] = beta2 * mom.v[i] + (1.0 - beta2) * grad[i] * grad[i];
      param[i] = static_cast<float>(param[i] - lr * (mom.m[i] / c1) / (std::sqrt(mom.v[i] / c2) + eps));
    }
  }

  static SaeTrainResult run(const Matrix& x, int F, int k, const SaeTrainOptions& opt) {
    const int n = x.rows();
    const int d = x.cols();
    if (n < 1 || d < 1) throw ContractError("train_sae needs at least one activation row");
    if (!all_finite(x.data())) throw ContractError("train_sae: activations contain non-finite values");
    if (k < 1 || k > F) throw ConfigError("SAE k must satisfy 1 <= k <= F");
    if (opt.steps < 0 || opt.batch_size < 1 || !(opt.learning_rate > 0.0)) throw ConfigError("invalid training options");

    Rng rng(mix_seed(opt.seed, 0x7A1));
    // Decoder initialised from normalised data rows (random rows when F > n).
    Matrix w_dec(d, F);
    for (int f = 0; f < F; ++f) {
      const int src = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
      double sq = 0.0;
      for (int r = 0; r < d; ++r) sq += static_cast<double>(x(src, r)) * x(src, r);
      for (int r = 0; r < d; ++r) {
        w_dec(r, f) = sq > 0.0 ? x(src, r) : static_cast<float>(rng.normal());
        // Small jitter keeps duplicated rows from producing identical features.
        w_dec(r, f) += static_cast<float>(0.01 * rng.normal() * (sq > 0.0 ? std::sqrt(sq / d) : 1.0));
      }
    }
    normalise_columns(w_dec);
    Matrix w_enc = transpose(w_dec);
    SaeDictionary sae(opt.layer, k, std::move(w_enc), std::vector<float>(static_cast<std::size_t>(F), 0.0f),
                      std::move(w_dec), std::vector<float>(static_cast<std::size_t>(d), 0.0f));

    SaeTrainResult result;
    result.initial_loss = reconstruction_loss(sae, x);
    if (opt.steps == 0) {
      result.final_loss = result.initial_loss;
      result.sae = std::move(sae);
      return result;
    }

    const std::size_t fd = static_cast<std::size_t>(F) * d;
    std::vector<double> g_we(fd), g_be(static_cast<std::size_t>(F)), g_wd(fd), g_bd(static_cast<std::size_t>(d));
    Moments m_we(fd), m_be(static_cast<std::size_t>(F)), m_wd(fd), m_bd(static_cast<std::size_t>(d));

    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(std::span<int>(order));
    std::size_t cursor = 0;
    const int steps_per_epoch = (n + opt.batch_size - 1) / opt.batch_size;

    std::vector<double> resid(static_cast<std::size_t>(d)), gz(static_cast<std::size_t>(k));
    for (int step = 1; step <= opt.steps; ++step) {
      std::fill(g_we.begin(), g_we.end(), 0.0);
      std::fill(g_be.begin(), g_be.end(), 0.0);
      std::fill(g_wd.begin(), g_wd.end(), 0.0);
      std::fill(g_bd.begin(), g_bd.end(), 0.0);
      const int bs = std::min(opt.batch_size, n);
      const double scale = 2.0 / (static_cast<double>(bs) * d);
      for (int b = 0; b < bs; ++b) {
        if (cursor == order.size()) {
          rng.shuffle(std::span<int>(order));
          cursor = 0;
        }
        const auto h = x.row(order[cursor++]);
        const auto z = encode(sae, h);
        const auto rec = decode(sae, z);
        for (int r = 0; r < d; ++r) {
          resid[static_cast<std::size_t>(r)] = scale * (static_cast<double>(rec[static_cast<std::size_t>(r)]) - h[static_cast<std::size_t>(r)]);
          g_bd[static_cast<std::size_t>(r)] += resid[static_cast<std::size_t>(r)];
        }
        for (std::size_t a = 0; a < z.indices.size(); ++a) {
          const int f = z.indices[a];
          const auto col = sae.decoder_column(f);
          double g = 0.0;
          for (int r = 0; r < d; ++r) {
            g_wd[static_cast<std::size_t>(r) * F + static_cast<std::size_t>(f)] += resid[static_cast<std::size_t>(r)] * z.values[a];
            g += resid[static_cast<std::size_t>(r)] * col[static_cast<std::size_t>(r)];
          }
          g_be[static_cast<std::size_t>(f)] += g;
          for (int c = 0; c < d; ++c) g_we[static_cast<std::size_t>(f) * d + static_cast<std::size_t>(c)] += g * h[static_cast<std::size_t>(c)];
        }
      }
      adam(sae.w_enc_.data(), g_we, m_we, opt.learning_rate, step);
      adam(sae.b_enc_, g_be, m_be, opt.learning_rate, step);
      adam(sae.w_dec_.data(), g_wd, m_wd, opt.learning_rate, step);
      adam(sae.b_dec_, g_bd, m_bd, opt.learning_rate, step);
      normalise_columns(sae.w_dec_);
      sae.rebuild_columns();
      if (!all_finite(sae.w_enc_.data()) || !all_finite(sae.w_dec_.data())) {
        throw TrainingError("SAE training diverged at step " + std::to_string(step));
      }

      if (step % steps_per_epoch == 0 || step == opt.steps) {
        const double loss = reconstruction_loss(sae, x);
        if (!std::isfinite(loss)) throw TrainingError("SAE training loss became non-finite");
        if (step % steps_per_epoch == 0) result.epoch_loss.push_back(loss);
        result.final_loss = loss;
      }
    }
    result.sae = std::move(sae);
    return result;
  }
};

SaeTrainResult train_sae(const Matrix& activations, int n_features, int k, const SaeTrainOptions& options) {
  return SaeTrainer::run(activations, n_features, k, options);
}

}  // namespace circuits
