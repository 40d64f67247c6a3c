// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "circuits/model.hpp"

namespace circuits {

int Cell::valid_positions() const {
  return static_cast<int>(std::count(padding.begin(), padding.end(), std::uint8_t{0}));
}

void CellBatch::validate() const {
  if (seq_len < 1) throw ContractError("batch seq_len must be positive");
  for (const auto& c : cells) {
    const auto n = static_cast<std::size_t>(seq_len);
    if (c.tokens.size() != n || c.values.size() != n || c.padding.size() != n) {
      throw ContractError("cell " + std::to_string(c.cell_id) + " does not have seq_len positions");
    }
    if (!all_finite(c.values)) throw ContractError("cell " + std::to_string(c.cell_id) + " has non-finite values");
  }
}

std::uint64_t CellBatch::fingerprint() const {
  Fingerprint fp;
  fp.add(std::int64_t{seq_len}).add(static_cast<std::int64_t>(cells.size()));
  for (const auto& c : cells) {
    fp.add(std::int64_t{c.cell_id}).add(std::int64_t{c.cluster}).add(c.values);
    for (auto t : c.tokens) fp.add(std::int64_t{t});
    for (auto p : c.padding) fp.add(std::int64_t{p});
  }
  return fp.value();
}

void CellBatch::save(const std::filesystem::path& path) const {
  nlohmann::json out;
  out["format"] = "circuits-cells";
  out["seq_len"] = seq_len;
  auto& arr = out["cells"] = nlohmann::json::array();
  for (const auto& c : cells) {
    arr.push_back({{"id", c.cell_id},
                   {"cluster", c.cluster},
                   {"tokens", c.tokens},
                   {"values", c.values},
                   {"padding", c.padding}});
  }
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw ConfigError("cannot write " + path.string());
  os << out.dump() << '\n';
}

CellBatch CellBatch::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open " + path.string());
  CellBatch batch;
  try {
    const auto in = nlohmann::json::parse(is);
    if (in.value("format", "") != "circuits-cells") throw FormatError(path.string() + " is not a cell batch");
    batch.seq_len = in.at("seq_len").get<int>();
    for (const auto& c : in.at("cells")) {
      Cell cell;
      cell.cell_id = c.at("id").get<int>();
      cell.cluster = c.at("cluster").get<int>();
      cell.tokens = c.at("tokens").get<std::vector<std::int32_t>>();
      cell.values = c.at("values").get<std::vector<float>>();
      cell.padding = c.at("padding").get<std::vector<std::uint8_t>>();
      batch.cells.push_back(std::move(cell));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  batch.validate();
  return batch;
}

CellBatch generate_cells(std::uint64_t seed, int n_cells, int seq_len, int vocab, CellKind kind, int n_clusters) {
  if (n_cells < 1) throw ConfigError("n_cells must be >= 1");
  if (seq_len < 1) throw ConfigError("seq_len must be >= 1");
  if (vocab < 2) throw ConfigError("vocab must be >= 2");
  if (kind == CellKind::K562Like) n_clusters = 1;
  if (n_clusters < 1) throw ConfigError("n_clusters must be >= 1");

  Rng rng(mix_seed(seed, 0xCE11));
  const int n_real = vocab - 1;  // token 0 is padding

  // Per-cluster token weights and value location.
  std::vector<std::vector<double>> weights(static_cast<std::size_t>(n_clusters), std::vector<double>(static_cast<std::size_t>(n_real)));
  std::vector<double> value_loc(static_cast<std::size_t>(n_clusters));
  std::vector<double> base(static_cast<std::size_t>(n_real));
  for (auto& w : base) w = rng.uniform(0.8, 1.2);
  for (int c = 0; c < n_clusters; ++c) {
    for (int t = 0; t < n_real; ++t) {
      double w = base[static_cast<std::size_t>(t)];
      if (n_clusters > 1 && t % n_clusters == c) w *= 2.5;
      weights[static_cast<std::size_t>(c)][static_cast<std::size_t>(t)] = w;
    }
    value_loc[static_cast<std::size_t>(c)] = 0.3 + 0.2 * c;
  }

  CellBatch batch;
  batch.seq_len = seq_len;
  batch.cells.reserve(static_cast<std::size_t>(n_cells));
  const int min_valid = std::max(1, static_cast<int>(std::ceil(0.85 * seq_len)));

  // Clusters are contiguous blocks of near-equal size, larger blocks first.
  std::vector<int> cluster_of(static_cast<std::size_t>(n_cells));
  {
    int cell = 0;
    for (int c = 0; c < n_clusters; ++c) {
      const int size = n_cells / n_clusters + (c < n_cells % n_clusters ? 1 : 0);
      for (int i = 0; i < size; ++i) cluster_of[static_cast<std::size_t>(cell++)] = c;
    }
  }

  std::vector<std::pair<double, int>> keys(static_cast<std::size_t>(n_real));
  for (int i = 0; i < n_cells; ++i) {
    const int cluster = cluster_of[static_cast<std::size_t>(i)];
    const auto& w = weights[static_cast<std::size_t>(cluster)];
    const int valid = min_valid + static_cast<int>(rng.below(static_cast<std::uint64_t>(seq_len - min_valid + 1)));

    Cell cell;
    cell.cell_id = i;
    cell.cluster = cluster;
    cell.tokens.assign(static_cast<std::size_t>(seq_len), kPadToken);
    cell.values.assign(static_cast<std::size_t>(seq_len), 0.0f);
    cell.padding.assign(static_cast<std::size_t>(seq_len), 1);

    std::vector<std::int32_t> chosen;
    if (n_real >= valid) {
      // Weighted sampling without replacement (exponential keys).
      for (int t = 0; t < n_real; ++t) {
        double u = rng.uniform();
        while (u <= 0.0) u = rng.uniform();
        keys[static_cast<std::size_t>(t)] = {std::log(u) / w[static_cast<std::size_t>(t)], t + 1};
      }
      std::partial_sort(keys.begin(), keys.begin() + valid, keys.end(),
                        [](const auto& a, const auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });
      for (int k = 0; k < valid; ++k) chosen.push_back(keys[static_cast<std::size_t>(k)].second);
    } else {
      const double total = std::accumulate(w.begin(), w.end(), 0.0);
      for (int k = 0; k < valid; ++k) {
        double r = rng.uniform() * total;
        int t = 0;
        while (t < n_real - 1 && r >= w[static_cast<std::size_t>(t)]) r -= w[static_cast<std::size_t>(t++)];
        chosen.push_back(t + 1);
      }
    }

    std::vector<float> vals(static_cast<std::size_t>(valid));
    for (auto& v : vals) v = static_cast<float>(std::exp(value_loc[static_cast<std::size_t>(cluster)] + 0.5 * rng.normal()));
    std::sort(vals.begin(), vals.end(), std::greater<>());
    for (int k = 0; k < valid; ++k) {
      cell.tokens[static_cast<std::size_t>(k)] = chosen[static_cast<std::size_t>(k)];
      cell.values[static_cast<std::size_t>(k)] = vals[static_cast<std::size_t>(k)];
      cell.padding[static_cast<std::size_t>(k)] = 0;
    }
    batch.cells.push_back(std::move(cell));
  }
  return batch;
}

}  // namespace circuits
