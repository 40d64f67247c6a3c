// SPDX-License-Identifier: Apache-2.0

#include "circuits/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "circuits/blob_io.hpp"

namespace circuits {

const char* to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::ToyTransformer: return "toy-transformer";
    case ModelKind::PlantedLinear: return "planted-linear";
  }
  return "unknown";
}

namespace {

constexpr float kLayerNormEps = 1e-5f;

std::vector<float> gaussian_vector(Rng& rng, std::size_t n, double scale) {
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(rng.normal() * scale);
  return v;
}

Matrix gaussian_matrix(Rng& rng, int rows, int cols, double scale) {
  Matrix m(rows, cols);
  for (auto& x : m.data()) x = static_cast<float>(rng.normal() * scale);
  return m;
}

void layer_norm(std::span<const float> x, std::span<const float> gain, std::span<const float> bias,
                std::span<float> out) {
  const std::size_t d = x.size();
  float mean = 0.0f;
  for (float v : x) mean += v;
  mean /= static_cast<float>(d);
  float var = 0.0f;
  for (float v : x) var += (v - mean) * (v - mean);
  var /= static_cast<float>(d);
  const float inv = 1.0f / std::sqrt(var + kLayerNormEps);
  for (std::size_t i = 0; i < d; ++i) out[i] = (x[i] - mean) * inv * gain[i] + bias[i];
}

// y = W x (+ b)
void matvec(const Matrix& w, std::span<const float> x, std::span<float> y, std::span<const float> b = {}) {
  for (int r = 0; r < w.rows(); ++r) {
    const auto row = w.row(r);
    float acc = b.empty() ? 0.0f : b[static_cast<std::size_t>(r)];
    for (int c = 0; c < w.cols(); ++c) acc += row[static_cast<std::size_t>(c)] * x[static_cast<std::size_t>(c)];
    y[static_cast<std::size_t>(r)] = acc;
  }
}

float gelu(float x) {
  constexpr float k = 0.7978845608028654f;
  return 0.5f * x * (1.0f + std::tanh(k * (x + 0.044715f * x * x * x)));
}

void apply_toy_block(const ToyBlock& blk, int n_heads, Matrix& x, std::span<const std::uint8_t> padding) {
  const int n = x.rows();
  const int d = x.cols();
  const int dh = d / n_heads;
  const float scale = 1.0f / std::sqrt(static_cast<float>(dh));

  Matrix normed(n, d), q(n, d), k(n, d), v(n, d);
  for (int i = 0; i < n; ++i) {
    layer_norm(x.row(i), blk.ln1_gain, blk.ln1_bias, normed.row(i));
    matvec(blk.wq, normed.row(i), q.row(i));
    matvec(blk.wk, normed.row(i), k.row(i));
    matvec(blk.wv, normed.row(i), v.row(i));
  }

  Matrix attended(n, d);
  std::vector<float> scores(static_cast<std::size_t>(n));
  for (int h = 0; h < n_heads; ++h) {
    const int off = h * dh;
    for (int i = 0; i < n; ++i) {
      float max_score = -INFINITY;
      bool any = false;
      for (int j = 0; j < n; ++j) {
        if (padding[static_cast<std::size_t>(j)]) continue;
        float s = 0.0f;
        for (int c = 0; c < dh; ++c) s += q(i, off + c) * k(j, off + c);
        s *= scale;
        scores[static_cast<std::size_t>(j)] = s;
        max_score = std::max(max_score, s);
        any = true;
      }
      // No valid keys: the head contributes nothing.
      if (!any) continue;
      float denom = 0.0f;
      for (int j = 0; j < n; ++j) {
        if (padding[static_cast<std::size_t>(j)]) continue;
        const float e = std::exp(scores[static_cast<std::size_t>(j)] - max_score);
        scores[static_cast<std::size_t>(j)] = e;
        denom += e;
      }
      for (int j = 0; j < n; ++j) {
        if (padding[static_cast<std::size_t>(j)]) continue;
        const float p = scores[static_cast<std::size_t>(j)] / denom;
        for (int c = 0; c < dh; ++c) attended(i, off + c) += p * v(j, off + c);
      }
    }
  }

  std::vector<float> tmp(static_cast<std::size_t>(d));
  for (int i = 0; i < n; ++i) {
    matvec(blk.wo, attended.row(i), tmp);
    auto row = x.row(i);
    for (int c = 0; c < d; ++c) row[static_cast<std::size_t>(c)] += tmp[static_cast<std::size_t>(c)];
  }

  std::vector<float> ln(static_cast<std::size_t>(d)), hidden(static_cast<std::size_t>(blk.w1.rows()));
  for (int i = 0; i < n; ++i) {
    auto row = x.row(i);
    layer_norm(row, blk.ln2_gain, blk.ln2_bias, ln);
    matvec(blk.w1, ln, hidden, blk.b1);
    for (auto& hv : hidden) hv = gelu(hv);
    matvec(blk.w2, hidden, tmp, blk.b2);
    for (int c = 0; c < d; ++c) row[static_cast<std::size_t>(c)] += tmp[static_cast<std::size_t>(c)];
  }
}

void apply_planted_terms(const std::vector<PlantedTerm>& terms, Matrix& x) {
  if (terms.empty()) return;
  const int d = x.cols();
  std::vector<float> coeff(terms.size());
  for (int i = 0; i < x.rows(); ++i) {
    auto row = x.row(i);
    for (std::size_t t = 0; t < terms.size(); ++t) {
      float dot = 0.0f;
      for (int c = 0; c < d; ++c) dot += row[static_cast<std::size_t>(c)] * terms[t].read[static_cast<std::size_t>(c)];
      coeff[t] = terms[t].weight * dot;
    }
    for (std::size_t t = 0; t < terms.size(); ++t) {
      if (coeff[t] == 0.0f) continue;
      for (int c = 0; c < d; ++c) row[static_cast<std::size_t>(c)] += coeff[t] * terms[t].write[static_cast<std::size_t>(c)];
    }
  }
}

std::vector<float> basis_column(const Matrix& basis, int j) {
  std::vector<float> col(static_cast<std::size_t>(basis.rows()));
  for (int r = 0; r < basis.rows(); ++r) col[static_cast<std::size_t>(r)] = basis(r, j);
  return col;
}

std::vector<std::vector<PlantedTerm>> planted_transitions(const PlantedSpec& spec, int n_layers) {
  std::vector<std::vector<PlantedTerm>> transitions(static_cast<std::size_t>(n_layers));
  // Relay slots are handed out from the top of each intermediate layer's basis.
  std::vector<int> next_relay(static_cast<std::size_t>(n_layers));
  for (int l = 0; l < n_layers; ++l) next_relay[static_cast<std::size_t>(l)] = spec.bases[static_cast<std::size_t>(l)].cols() - 1;

  auto used_at = [&](int layer, int index) {
    for (const auto& e : spec.edges) {
      if ((e.source.layer == layer && e.source.index == index) || (e.target.layer == layer && e.target.index == index)) {
        return true;
      }
    }
    return false;
  };

  for (const auto& e : spec.edges) {
    const auto& src_basis = spec.bases[static_cast<std::size_t>(e.source.layer)];
    const auto& dst_basis = spec.bases[static_cast<std::size_t>(e.target.layer)];
    const auto read = basis_column(src_basis, e.source.index);
    const auto write = basis_column(dst_basis, e.target.index);
    const int span = e.target.layer - e.source.layer;
    if (span == 1) {
      transitions[static_cast<std::size_t>(e.target.layer)].push_back({read, write, static_cast<float>(e.weight)});
      continue;
    }
    const int relay_layer = e.source.layer + 1;
    int& slot = next_relay[static_cast<std::size_t>(relay_layer)];
    for (int l = relay_layer; l < e.target.layer; ++l) {
      if (used_at(l, slot)) {
        throw ConfigError("relay direction " + std::to_string(slot) + " at layer " + std::to_string(l) +
                          " collides with a planted edge endpoint");
      }
    }
    if (slot < 0) throw ConfigError("no relay directions left at layer " + std::to_string(relay_layer));
    const auto relay = basis_column(spec.bases[static_cast<std::size_t>(relay_layer)], slot);
    --slot;
    transitions[static_cast<std::size_t>(relay_layer)].push_back({read, relay, static_cast<float>(e.weight)});
    transitions[static_cast<std::size_t>(e.target.layer)].push_back({relay, write, 1.0f});
  }
  return transitions;
}

void check_finite(const Matrix& states, int layer) {
  if (!all_finite(states.data())) {
    throw NumericError("non-finite hidden state at layer " + std::to_string(layer));
  }
}

}  // namespace

// ---------------------------------------------------------------------------

void PlantedSpec::validate(int n_layers, int d_model) const {
  if (static_cast<int>(bases.size()) != n_layers) {
    throw ConfigError("planted spec needs one basis per layer");
  }
  for (int l = 0; l < n_layers; ++l) {
    const Matrix& b = bases[static_cast<std::size_t>(l)];
    if (b.rows() != d_model || b.cols() < 1 || b.cols() > d_model) {
      throw ConfigError("planted basis at layer " + std::to_string(l) + " has invalid shape");
    }
    for (int i = 0; i < b.cols(); ++i) {
      for (int j = i; j < b.cols(); ++j) {
        double dot = 0.0;
        for (int r = 0; r < d_model; ++r) dot += static_cast<double>(b(r, i)) * b(r, j);
        const double want = i == j ? 1.0 : 0.0;
        if (std::abs(dot - want) > 1e-4) {
          throw ConfigError("planted basis at layer " + std::to_string(l) + " is not orthonormal");
        }
      }
    }
  }
  for (const auto& e : edges) {
    if (e.source.layer >= e.target.layer) throw ConfigError("planted edge must point to a later layer");
    if (e.source.layer < 0 || e.target.layer >= n_layers) throw ConfigError("planted edge layer out of range");
    if (!std::isfinite(e.weight) || e.weight == 0.0) throw ConfigError("planted edge weight must be finite and non-zero");
    const auto& sb = bases[static_cast<std::size_t>(e.source.layer)];
    const auto& tb = bases[static_cast<std::size_t>(e.target.layer)];
    if (e.source.index < 0 || e.source.index >= sb.cols() || e.target.index < 0 || e.target.index >= tb.cols()) {
      throw ConfigError("planted edge direction index out of range: " + e.source.str() + " -> " + e.target.str());
    }
  }
}

LayeredModel::LayeredModel(ModelKind kind, int n_layers, int d_model, int vocab, int max_seq_len,
                           std::uint64_t seed, std::variant<ToyTransformerParams, PlantedParams> params)
    : kind_(kind),
      n_layers_(n_layers),
      d_model_(d_model),
      vocab_(vocab),
      max_seq_len_(max_seq_len),
      seed_(seed),
      params_(std::move(params)) {}

Matrix LayeredModel::embed(const Cell& cell) const {
  const int n = static_cast<int>(cell.tokens.size());
  if (n > max_seq_len_) throw ContractError("cell longer than the model's max_seq_len");
  Matrix x(n, d_model_);
  for (int i = 0; i < n; ++i) {
    const auto tok = cell.tokens[static_cast<std::size_t>(i)];
    if (tok < 0 || tok >= vocab_) throw ContractError("token id " + std::to_string(tok) + " outside vocabulary");
    const float value = cell.values[static_cast<std::size_t>(i)];
    auto row = x.row(i);
    if (const auto* p = toy()) {
      const auto te = p->token_embedding.row(tok);
      const auto pe = p->position_embedding.row(i);
      for (int c = 0; c < d_model_; ++c) {
        row[static_cast<std::size_t>(c)] =
            te[static_cast<std::size_t>(c)] + value * p->value_embedding[static_cast<std::size_t>(c)] + pe[static_cast<std::size_t>(c)];
      }
    } else {
      const auto te = planted()->token_embedding.row(tok);
      for (int c = 0; c < d_model_; ++c) row[static_cast<std::size_t>(c)] = value * te[static_cast<std::size_t>(c)];
    }
  }
  return x;
}

void LayeredModel::apply_layer(int layer, Matrix& states, std::span<const std::uint8_t> padding) const {
  if (layer < 0 || layer >= n_layers_) throw ContractError("layer index out of range");
  if (const auto* p = toy()) {
    apply_toy_block(p->blocks[static_cast<std::size_t>(layer)], p->n_heads, states, padding);
  } else {
    apply_planted_terms(planted()->transitions[static_cast<std::size_t>(layer)], states);
  }
}

std::uint64_t LayeredModel::fingerprint() const {
  Fingerprint fp;
  fp.add(std::string_view(to_string(kind_)))
      .add(std::int64_t{n_layers_})
      .add(std::int64_t{d_model_})
      .add(std::int64_t{vocab_})
      .add(static_cast<std::int64_t>(seed_));
  if (const auto* p = toy()) {
    fp.add(p->token_embedding.data()).add(p->value_embedding).add(p->position_embedding.data());
    for (const auto& b : p->blocks) {
      fp.add(b.wq.data()).add(b.wk.data()).add(b.wv.data()).add(b.wo.data()).add(b.w1.data()).add(b.w2.data());
    }
  } else {
    const auto* q = planted();
    fp.add(q->token_embedding.data());
    for (const auto& b : q->spec.bases) fp.add(b.data());
    for (const auto& e : q->spec.edges) {
      fp.add(e.source.str()).add(e.target.str()).add(e.weight);
    }
  }
  return fp.value();
}

// ---------------------------------------------------------------------------

LayeredModel build_toy_transformer(std::uint64_t seed, int n_layers, int d_model, int n_heads, int vocab,
                                   int max_seq_len) {
  if (n_layers < 2) throw ConfigError("toy transformer needs at least 2 layers");
  if (d_model < 1 || n_heads < 1 || d_model % n_heads != 0) {
    throw ConfigError("d_model must be a positive multiple of n_heads");
  }
  if (vocab < 2 || max_seq_len < 1) throw ConfigError("invalid vocabulary or sequence length");

  Rng rng(mix_seed(seed, 0x70F));
  const double s = 1.0 / std::sqrt(static_cast<double>(d_model));
  ToyTransformerParams p;
  p.n_heads = n_heads;
  p.token_embedding = gaussian_matrix(rng, vocab, d_model, 1.0);
  p.value_embedding = gaussian_vector(rng, static_cast<std::size_t>(d_model), 0.5);
  p.position_embedding = gaussian_matrix(rng, max_seq_len, d_model, 0.1);
  for (int l = 0; l < n_layers; ++l) {
    ToyBlock b;
    b.ln1_gain.assign(static_cast<std::size_t>(d_model), 1.0f);
    b.ln1_bias.assign(static_cast<std::size_t>(d_model), 0.0f);
    b.ln2_gain.assign(static_cast<std::size_t>(d_model), 1.0f);
    b.ln2_bias.assign(static_cast<std::size_t>(d_model), 0.0f);
    b.wq = gaussian_matrix(rng, d_model, d_model, s);
    b.wk = gaussian_matrix(rng, d_model, d_model, s);
    b.wv = gaussian_matrix(rng, d_model, d_model, s);
    b.wo = gaussian_matrix(rng, d_model, d_model, 0.5 * s);
    b.w1 = gaussian_matrix(rng, 4 * d_model, d_model, s);
    b.b1 = gaussian_vector(rng, static_cast<std::size_t>(4 * d_model), 0.02);
    b.w2 = gaussian_matrix(rng, d_model, 4 * d_model, 0.5 / std::sqrt(4.0 * d_model));
    b.b2 = gaussian_vector(rng, static_cast<std::size_t>(d_model), 0.02);
    p.blocks.push_back(std::move(b));
  }
  return LayeredModel(ModelKind::ToyTransformer, n_layers, d_model, vocab, max_seq_len, seed, std::move(p));
}

LayeredModel build_planted_model(const PlantedSpec& spec, int n_layers, int d_model, std::uint64_t seed, int vocab,
                                 int max_seq_len) {
  if (n_layers < 2 || d_model < 1) throw ConfigError("planted model needs at least 2 layers and d_model >= 1");
  if (vocab < 2 || max_seq_len < 1) throw ConfigError("invalid vocabulary or sequence length");
  spec.validate(n_layers, d_model);

  PlantedParams p;
  p.spec = spec;
  p.transitions = planted_transitions(spec, n_layers);

  // Tokens 1..vocab-1 are dealt round-robin over a seeded permutation of
  // the layer-0 directions; the pad token embeds to zero.
  const Matrix& b0 = spec.bases.front();
  std::vector<int> dirs(static_cast<std::size_t>(b0.cols()));
  for (int i = 0; i < b0.cols(); ++i) dirs[static_cast<std::size_t>(i)] = i;
  Rng rng(mix_seed(seed, 0xE3B));
  rng.shuffle(std::span<int>(dirs));
  p.token_embedding = Matrix(vocab, d_model);
  for (int tok = 1; tok < vocab; ++tok) {
    const int dir = dirs[static_cast<std::size_t>((tok - 1) % b0.cols())];
    for (int r = 0; r < d_model; ++r) p.token_embedding(tok, r) = b0(r, dir);
  }
  return LayeredModel(ModelKind::PlantedLinear, n_layers, d_model, vocab, max_seq_len, seed, std::move(p));
}

std::vector<HiddenState> forward_clean(const LayeredModel& model, const Cell& cell) {
  Matrix x = model.embed(cell);
  std::vector<HiddenState> out;
  out.reserve(static_cast<std::size_t>(model.n_layers()));
  for (int l = 0; l < model.n_layers(); ++l) {
    model.apply_layer(l, x, cell.padding);
    check_finite(x, l);
    out.push_back({l, x});
  }
  return out;
}

std::vector<std::vector<HiddenState>> forward_clean(const LayeredModel& model, const CellBatch& batch) {
  if (batch.cells.empty()) throw ContractError("forward_clean on an empty batch");
  std::vector<std::vector<HiddenState>> out;
  out.reserve(batch.cells.size());
  for (const auto& cell : batch.cells) out.push_back(forward_clean(model, cell));
  return out;
}

std::vector<HiddenState> forward_from(const LayeredModel& model, int start_layer, const HiddenState& state,
                                      std::span<const std::uint8_t> padding) {
  if (state.layer != start_layer) throw ContractError("hidden state layer does not match start layer");
  if (start_layer < 0 || start_layer >= model.n_layers()) throw ContractError("start layer out of range");
  std::vector<HiddenState> out;
  if (start_layer + 1 >= model.n_layers()) return out;
  Matrix x = state.states;
  for (int l = start_layer + 1; l < model.n_layers(); ++l) {
    model.apply_layer(l, x, padding);
    check_finite(x, l);
    out.push_back({l, x});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialisation

void LayeredModel::save(const std::filesystem::path& manifest) const {
  TensorBundle bundle;
  bundle.meta = {{"format", "circuits-model"},
                 {"kind", to_string(kind_)},
                 {"n_layers", n_layers_},
                 {"d_model", d_model_},
                 {"vocab", vocab_},
                 {"max_seq_len", max_seq_len_},
                 {"seed", seed_}};
  const int d = d_model_;
  if (const auto* p = toy()) {
    bundle.meta["n_heads"] = p->n_heads;
    bundle.put("token_embedding", {vocab_, d}, p->token_embedding.data());
    bundle.put("value_embedding", {d}, p->value_embedding);
    bundle.put("position_embedding", {max_seq_len_, d}, p->position_embedding.data());
    for (int l = 0; l < n_layers_; ++l) {
      const auto& b = p->blocks[static_cast<std::size_t>(l)];
      const std::string pre = "block." + std::to_string(l) + ".";
      bundle.put(pre + "ln1_gain", {d}, b.ln1_gain);
      bundle.put(pre + "ln1_bias", {d}, b.ln1_bias);
      bundle.put(pre + "wq", {d, d}, b.wq.data());
      bundle.put(pre + "wk", {d, d}, b.wk.data());
      bundle.put(pre + "wv", {d, d}, b.wv.data());
      bundle.put(pre + "wo", {d, d}, b.wo.data());
      bundle.put(pre + "ln2_gain", {d}, b.ln2_gain);
      bundle.put(pre + "ln2_bias", {d}, b.ln2_bias);
      bundle.put(pre + "w1", {4 * d, d}, b.w1.data());
      bundle.put(pre + "b1", {4 * d}, b.b1);
      bundle.put(pre + "w2", {d, 4 * d}, b.w2.data());
      bundle.put(pre + "b2", {d}, b.b2);
    }
  } else {
    const auto* q = planted();
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& e : q->spec.edges) {
      edges.push_back({{"source", e.source.str()}, {"target", e.target.str()}, {"weight", e.weight}});
    }
    bundle.meta["planted_edges"] = std::move(edges);
    bundle.put("token_embedding", {vocab_, d}, q->token_embedding.data());
    for (int l = 0; l < n_layers_; ++l) {
      const auto& b = q->spec.bases[static_cast<std::size_t>(l)];
      bundle.put("basis." + std::to_string(l), {b.rows(), b.cols()}, b.data());
    }
  }
  bundle.save(manifest);
}

namespace {

Matrix to_matrix(const TensorRecord& rec) {
  if (rec.shape.size() != 2) throw FormatError("expected a 2-d tensor");
  Matrix m(rec.shape[0], rec.shape[1]);
  std::copy(rec.values.begin(), rec.values.end(), m.data().begin());
  return m;
}

Matrix load_matrix(const TensorBundle& bundle, const std::string& name, int rows, int cols) {
  const auto& v = bundle.get(name, {rows, cols});
  Matrix m(rows, cols);
  std::copy(v.begin(), v.end(), m.data().begin());
  return m;
}

}  // namespace

LayeredModel LayeredModel::load(const std::filesystem::path& manifest) {
  const auto bundle = TensorBundle::load(manifest);
  try {
    const auto& meta = bundle.meta;
    if (meta.value("format", "") != "circuits-model") throw FormatError(manifest.string() + " is not a model manifest");
    const auto kind = meta.at("kind").get<std::string>();
    const int n_layers = meta.at("n_layers").get<int>();
    const int d = meta.at("d_model").get<int>();
    const int vocab = meta.at("vocab").get<int>();
    const int max_seq = meta.at("max_seq_len").get<int>();
    const auto seed = meta.at("seed").get<std::uint64_t>();

    if (kind == to_string(ModelKind::ToyTransformer)) {
      ToyTransformerParams p;
      p.n_heads = meta.at("n_heads").get<int>();
      p.token_embedding = load_matrix(bundle, "token_embedding", vocab, d);
      p.value_embedding = bundle.get("value_embedding", {d});
      p.position_embedding = load_matrix(bundle, "position_embedding", max_seq, d);
      for (int l = 0; l < n_layers; ++l) {
        const std::string pre = "block." + std::to_string(l) + ".";
        ToyBlock b;
        b.ln1_gain = bundle.get(pre + "ln1_gain", {d});
        b.ln1_bias = bundle.get(pre + "ln1_bias", {d});
        b.wq = load_matrix(bundle, pre + "wq", d, d);
        b.wk = load_matrix(bundle, pre + "wk", d, d);
        b.wv = load_matrix(bundle, pre + "wv", d, d);
        b.wo = load_matrix(bundle, pre + "wo", d, d);
        b.ln2_gain = bundle.get(pre + "ln2_gain", {d});
        b.ln2_bias = bundle.get(pre + "ln2_bias", {d});
        b.w1 = load_matrix(bundle, pre + "w1", 4 * d, d);
        b.b1 = bundle.get(pre + "b1", {4 * d});
        b.w2 = load_matrix(bundle, pre + "w2", d, 4 * d);
        b.b2 = bundle.get(pre + "b2", {d});
        p.blocks.push_back(std::move(b));
      }
      if (d % p.n_heads != 0) throw FormatError("d_model not divisible by n_heads");
      return LayeredModel(ModelKind::ToyTransformer, n_layers, d, vocab, max_seq, seed, std::move(p));
    }
    if (kind == to_string(ModelKind::PlantedLinear)) {
      PlantedParams p;
      for (const auto& e : meta.at("planted_edges")) {
        p.spec.edges.push_back({FeatureId::parse(e.at("source").get<std::string>()),
                                FeatureId::parse(e.at("target").get<std::string>()), e.at("weight").get<double>()});
      }
      for (int l = 0; l < n_layers; ++l) p.spec.bases.push_back(to_matrix(bundle.get("basis." + std::to_string(l))));
      p.spec.validate(n_layers, d);
      p.transitions = planted_transitions(p.spec, n_layers);
      p.token_embedding = load_matrix(bundle, "token_embedding", vocab, d);
      return LayeredModel(ModelKind::PlantedLinear, n_layers, d, vocab, max_seq, seed, std::move(p));
    }
    throw FormatError("unknown model kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(manifest.string() + ": " + e.what());
  }
}

}  // namespace circuits
