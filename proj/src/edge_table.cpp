// SPDX-License-Identifier: Apache-2.0

#include "circuits/graph.hpp"

namespace circuits {

std::string provenance_comment(std::uint64_t seed, std::uint64_t config_hash) {
  return "seed=" + std::to_string(seed) + ",config_hash=" + Fingerprint::to_hex(config_hash);
}

TextTable edges_to_table(const std::vector<CausalEdge>& edges, std::vector<std::string> comments) {
  TextTable t;
  t.comments = std::move(comments);
  t.header = {"source_layer", "source_feature", "target_layer", "target_feature", "cohens_d", "consistency", "n_cells", "sign"};
  t.rows.reserve(edges.size());
  for (const auto& e : edges) {
    t.rows.push_back({std::to_string(e.source.layer), std::to_string(e.source.index), std::to_string(e.target.layer),
                      std::to_string(e.target.index), format_double(e.d), format_double(e.consistency),
                      std::to_string(e.n), to_string(e.sign)});
  }
  return t;
}

std::vector<CausalEdge> edges_from_table(const TextTable& t, int model) {
  const auto sl = t.column("source_layer"), sf = t.column("source_feature"), tl = t.column("target_layer"),
             tf = t.column("target_feature"), cd = t.column("cohens_d"), cc = t.column("consistency"),
             cn = t.column("n_cells"), cs = t.column("sign");
  std::vector<CausalEdge> out;
  out.reserve(t.rows.size());
  for (const auto& r : t.rows) {
    CausalEdge e;
    e.source = {model, static_cast<int>(parse_int64(r[sl])), static_cast<int>(parse_int64(r[sf]))};
    e.target = {model, static_cast<int>(parse_int64(r[tl])), static_cast<int>(parse_int64(r[tf]))};
    e.d = parse_double(r[cd]);
    e.consistency = parse_double(r[cc]);
    e.n = parse_int64(r[cn]);
    if (r[cs] == "inhibitory") {
      e.sign = EdgeSign::Inhibitory;
    } else if (r[cs] == "excitatory") {
      e.sign = EdgeSign::Excitatory;
    } else {
      throw FormatError("unknown edge sign '" + r[cs] + "'");
    }
    if (e.source.layer >= e.target.layer) throw FormatError("edge " + e.source.str() + " -> " + e.target.str() + " does not go downstream");
    out.push_back(e);
  }
  return out;
}

void save_edges(const std::filesystem::path& path, const std::vector<CausalEdge>& edges, std::vector<std::string> comments) {
  edges_to_table(edges, std::move(comments)).save(path, ',');
}

std::vector<CausalEdge> load_edges(const std::filesystem::path& path, int model) {
  return edges_from_table(TextTable::load(path, ','), model);
}

}  // namespace circuits
