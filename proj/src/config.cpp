// SPDX-License-Identifier: Apache-2.0

#include "circuits/config.hpp"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "circuits/table_io.hpp"

namespace circuits {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto t = trim(item);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

fs::path resolve(const fs::path& base, const std::string& v) {
  fs::path p(v);
  return p.is_absolute() ? p : base / p;
}

std::string relative_text(const fs::path& p, const fs::path& base) {
  if (p.empty()) return {};
  auto rel = p.lexically_relative(base);
  return (rel.empty() || *rel.begin() == "..") ? p.generic_string() : rel.generic_string();
}

}  // namespace

const ConditionConfig& RunConfig::condition(const std::string& name) const {
  for (const auto& c : conditions) {
    if (c.name == name) return c;
  }
  throw ConfigError("unknown condition '" + name + "'");
}

void RunConfig::validate() const {
  trace.validate();
  if (!(pmi.pmi_threshold >= 0.0)) throw ConfigError("pmi.threshold_bits must be >= 0");
  if (pmi.min_support < 1) throw ConfigError("pmi.min_support_count must be >= 1");
  if (!(lfc_threshold >= 0.0)) throw ConfigError("validate.lfc_threshold_log2 must be >= 0");
  if (top_genes < 1) throw ConfigError("validate.top_genes_count must be >= 1");
  if (consensus_permutations < 1) throw ConfigError("consensus.permutations_count must be >= 1");
  auto must_exist = [](const fs::path& p, const std::string& what) {
    if (!p.empty() && !fs::exists(p)) throw ConfigError(what + " not found: " + p.string());
  };
  must_exist(annotations, "annotations");
  must_exist(gene_lists, "gene_lists");
  must_exist(domain_genes, "domain_genes");
  must_exist(perturbation, "perturbation");
  must_exist(tissue_keywords, "tissue_keywords");
  must_exist(disease_keywords, "disease_keywords");
  std::set<std::string> names;
  for (const auto& c : conditions) {
    if (c.model.empty()) throw ConfigError("condition " + c.name + " has no model");
    if (c.cells.empty()) throw ConfigError("condition " + c.name + " has no cells");
    if (c.saes.empty()) throw ConfigError("condition " + c.name + " has no SAEs");
    must_exist(c.model, "condition " + c.name + " model");
    must_exist(c.cells, "condition " + c.name + " cells");
    for (const auto& s : c.saes) must_exist(s, "condition " + c.name + " SAE");
    names.insert(c.name);
  }
  if (!tissue_reference.empty() && !names.contains(tissue_reference)) {
    throw ConfigError("tissue_reference names unknown condition '" + tissue_reference + "'");
  }
}

std::uint64_t RunConfig::hash() const {
  Fingerprint fp;
  fp.add("run-config").add(static_cast<std::int64_t>(seed)).add(static_cast<std::int64_t>(trace.hash()));
  fp.add(pmi.pmi_threshold).add(pmi.min_support).add(lfc_threshold).add(static_cast<std::int64_t>(top_genes));
  fp.add(std::int64_t{consensus_permutations}).add(tissue_reference);
  for (const auto& c : conditions) fp.add(c.name).add(c.label).add(std::int64_t{c.model_id}).add(c.group);
  return fp.value();
}

RunConfig parse_run_config(std::istream& is, const fs::path& base_dir, const std::string& origin) {
  RunConfig cfg;
  cfg.base_dir = base_dir;
  std::set<std::string> seen;
  std::map<std::string, std::size_t> cond_index;

  auto number = [&](const std::string& key, const std::string& v) {
    try {
      return parse_double(v);
    } catch (const Error&) {
      throw ConfigError(origin + ": " + key + " expects a number, got '" + v + "'");
    }
  };
  auto integer = [&](const std::string& key, const std::string& v) {
    try {
      return parse_int64(v);
    } catch (const Error&) {
      throw ConfigError(origin + ": " + key + " expects an integer, got '" + v + "'");
    }
  };

  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> global = {
      {"seed", [&](auto& k, auto& v) { cfg.seed = static_cast<std::uint64_t>(integer(k, v)); }},
      {"output_dir", [&](auto&, auto& v) { cfg.output_dir = resolve(base_dir, v); }},
      {"annotations", [&](auto&, auto& v) { cfg.annotations = resolve(base_dir, v); }},
      {"gene_lists", [&](auto&, auto& v) { cfg.gene_lists = resolve(base_dir, v); }},
      {"domain_genes", [&](auto&, auto& v) { cfg.domain_genes = resolve(base_dir, v); }},
      {"perturbation", [&](auto&, auto& v) { cfg.perturbation = resolve(base_dir, v); }},
      {"tissue_keywords", [&](auto&, auto& v) { cfg.tissue_keywords = resolve(base_dir, v); }},
      {"disease_keywords", [&](auto&, auto& v) { cfg.disease_keywords = resolve(base_dir, v); }},
      {"tissue_reference", [&](auto&, auto& v) { cfg.tissue_reference = v; }},
      {"trace.source_layers",
       [&](auto& k, auto& v) {
         cfg.trace.source_layers.clear();
         for (const auto& item : split_list(v)) cfg.trace.source_layers.push_back(static_cast<int>(integer(k, item)));
       }},
      {"trace.sources_per_layer_count", [&](auto& k, auto& v) { cfg.trace.sources_per_layer = static_cast<int>(integer(k, v)); }},
      {"trace.cells_count", [&](auto& k, auto& v) { cfg.trace.n_cells = static_cast<int>(integer(k, v)); }},
      {"trace.d_threshold_sd", [&](auto& k, auto& v) { cfg.trace.d_threshold = number(k, v); }},
      {"trace.consistency_threshold_fraction", [&](auto& k, auto& v) { cfg.trace.consistency_threshold = number(k, v); }},
      {"trace.checkpoint_every_cells", [&](auto& k, auto& v) { cfg.trace.checkpoint_every = static_cast<int>(integer(k, v)); }},
      {"pmi.threshold_bits", [&](auto& k, auto& v) { cfg.pmi.pmi_threshold = number(k, v); }},
      {"pmi.min_support_count", [&](auto& k, auto& v) { cfg.pmi.min_support = integer(k, v); }},
      {"validate.lfc_threshold_log2", [&](auto& k, auto& v) { cfg.lfc_threshold = number(k, v); }},
      {"validate.top_genes_count", [&](auto& k, auto& v) { cfg.top_genes = static_cast<std::size_t>(integer(k, v)); }},
      {"consensus.permutations_count", [&](auto& k, auto& v) { cfg.consensus_permutations = static_cast<int>(integer(k, v)); }},
  };

  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto where = origin + ":" + std::to_string(lineno);
    auto text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    const auto key = trim(std::string_view(text).substr(0, eq));
    const auto value = trim(std::string_view(text).substr(eq + 1));
    if (key.empty()) throw ConfigError(where + ": empty key");
    if (!seen.insert(key).second) throw ConfigError(where + ": repeated key '" + key + "'");

    if (auto it = global.find(key); it != global.end()) {
      it->second(key, value);
      continue;
    }
    if (key.rfind("condition.", 0) == 0) {
      const auto rest = key.substr(10);
      const auto dot = rest.find('.');
      if (dot == std::string::npos || dot == 0) throw ConfigError(where + ": malformed condition key '" + key + "'");
      const auto name = rest.substr(0, dot);
      const auto field = rest.substr(dot + 1);
      auto [ci, added] = cond_index.emplace(name, cfg.conditions.size());
      if (added) {
        cfg.conditions.emplace_back();
        cfg.conditions.back().name = name;
      }
      auto& c = cfg.conditions[ci->second];
      if (field == "label") {
        c.label = value;
      } else if (field == "model_id") {
        c.model_id = static_cast<int>(integer(key, value));
      } else if (field == "group") {
        c.group = value;
      } else if (field == "model") {
        c.model = resolve(base_dir, value);
      } else if (field == "cells") {
        c.cells = resolve(base_dir, value);
      } else if (field == "saes") {
        for (const auto& s : split_list(value)) c.saes.push_back(resolve(base_dir, s));
      } else {
        throw ConfigError(where + ": unknown condition field '" + field + "'");
      }
      continue;
    }
    throw ConfigError(where + ": unknown key '" + key + "'");
  }
  for (auto& c : cfg.conditions) {
    if (c.label.empty()) c.label = c.name;
    if (c.group.empty()) c.group = "model" + std::to_string(c.model_id);
  }
  return cfg;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config " + path.string());
  auto base = path.parent_path();
  if (base.empty()) base = ".";
  return parse_run_config(is, base, path.string());
}

void save_run_config(const fs::path& path, const RunConfig& c) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write " + path.string());
  const auto& b = c.base_dir;
  auto path_line = [&](const char* key, const fs::path& p) {
    if (!p.empty()) os << key << " = " << relative_text(p, b) << '\n';
  };
  os << "seed = " << c.seed << '\n';
  if (!c.output_dir.empty()) path_line("output_dir", c.output_dir);
  path_line("annotations", c.annotations);
  path_line("gene_lists", c.gene_lists);
  path_line("domain_genes", c.domain_genes);
  path_line("perturbation", c.perturbation);
  path_line("tissue_keywords", c.tissue_keywords);
  path_line("disease_keywords", c.disease_keywords);
  if (!c.tissue_reference.empty()) os << "tissue_reference = " << c.tissue_reference << '\n';
  os << '\n';
  os << "trace.source_layers = ";
  for (std::size_t i = 0; i < c.trace.source_layers.size(); ++i) os << (i ? ", " : "") << c.trace.source_layers[i];
  os << '\n';
  os << "trace.sources_per_layer_count = " << c.trace.sources_per_layer << '\n';
  os << "trace.cells_count = " << c.trace.n_cells << '\n';
  os << "trace.d_threshold_sd = " << format_double(c.trace.d_threshold) << '\n';
  os << "trace.consistency_threshold_fraction = " << format_double(c.trace.consistency_threshold) << '\n';
  os << "trace.checkpoint_every_cells = " << c.trace.checkpoint_every << '\n';
  os << "pmi.threshold_bits = " << format_double(c.pmi.pmi_threshold) << '\n';
  os << "pmi.min_support_count = " << c.pmi.min_support << '\n';
  os << "validate.lfc_threshold_log2 = " << format_double(c.lfc_threshold) << '\n';
  os << "validate.top_genes_count = " << c.top_genes << '\n';
  os << "consensus.permutations_count = " << c.consensus_permutations << '\n';
  for (const auto& cond : c.conditions) {
    const auto pre = "condition." + cond.name + ".";
    os << '\n';
    os << pre << "label = " << cond.label << '\n';
    os << pre << "model_id = " << cond.model_id << '\n';
    os << pre << "group = " << cond.group << '\n';
    os << pre << "model = " << relative_text(cond.model, b) << '\n';
    os << pre << "cells = " << relative_text(cond.cells, b) << '\n';
    os << pre << "saes = ";
    for (std::size_t i = 0; i < cond.saes.size(); ++i) os << (i ? ", " : "") << relative_text(cond.saes[i], b);
    os << '\n';
  }
  if (!os) throw ConfigError("failed writing " + path.string());
}

fs::path resolve_output_dir(const RunConfig& config) {
  if (const char* env = std::getenv("CIRCUITS_OUT_DIR"); env && *env) return env;
  if (!config.output_dir.empty()) return config.output_dir;
  return config.base_dir;
}

}  // namespace circuits
