// SPDX-License-Identifier: Apache-2.0

#include "circuits/report.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "circuits/graph.hpp"
#include "circuits/knowledge.hpp"

namespace circuits {

using nlohmann::json;

EdgeSummary summarize_edges(const std::vector<CausalEdge>& edges, int features_per_layer,
                            const AnnotationCatalog* catalog) {
  EdgeSummary s;
  s.total_edges = static_cast<std::int64_t>(edges.size());
  std::set<FeatureId> sources;
  std::set<int> targets;
  std::vector<double> abs_d;
  std::int64_t gt1 = 0, gt2 = 0, inhibitory = 0;
  for (const auto& e : edges) {
    sources.insert(e.source);
    targets.insert(e.target.index);
    const double a = std::abs(e.d);
    abs_d.push_back(a);
    if (a > 1.0) ++gt1;
    if (a > 2.0) ++gt2;
    if (e.d < 0.0) ++inhibitory;
  }
  s.source_features = static_cast<std::int64_t>(sources.size());
  s.target_features = static_cast<std::int64_t>(targets.size());
  if (features_per_layer > 0) s.target_coverage = static_cast<double>(targets.size()) / features_per_layer;
  if (!edges.empty()) {
    const double n = static_cast<double>(edges.size());
    double sum = 0.0;
    for (double a : abs_d) sum += a;
    s.mean_abs_d = sum / n;
    s.median_abs_d = median(abs_d);
    s.pct_abs_d_gt1 = 100.0 * static_cast<double>(gt1) / n;
    s.pct_abs_d_gt2 = 100.0 * static_cast<double>(gt2) / n;
    s.inhibitory_pct = 100.0 * static_cast<double>(inhibitory) / n;
  }
  if (catalog) {
    const auto c = coherence_fraction(CircuitGraph(edges), *catalog);
    s.annotated_edges = c.annotated_edges;
    if (c.fraction) s.coherence_pct = 100.0 * *c.fraction;
  }
  return s;
}

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string cell(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

}  // namespace

json to_json(const EdgeSummary& s) {
  return {{"total_edges", s.total_edges},
          {"source_features", s.source_features},
          {"target_features", s.target_features},
          {"target_coverage", opt(s.target_coverage)},
          {"mean_abs_d", opt(s.mean_abs_d)},
          {"median_abs_d", opt(s.median_abs_d)},
          {"pct_abs_d_gt1", opt(s.pct_abs_d_gt1)},
          {"pct_abs_d_gt2", opt(s.pct_abs_d_gt2)},
          {"inhibitory_pct", opt(s.inhibitory_pct)},
          {"annotated_edges", s.annotated_edges},
          {"coherence_pct", opt(s.coherence_pct)}};
}

json to_json(const TraceReport& r) {
  json layers = json::array();
  for (const auto& l : r.layers) {
    layers.push_back({{"layer", l.layer},
                      {"n_sources", l.n_sources},
                      {"downstream_layers", l.downstream_layers},
                      {"cells", l.cells},
                      {"passes", l.passes},
                      {"skipped_passes", l.skipped_passes},
                      {"seconds", l.seconds},
                      {"edges", l.edges},
                      {"min_out_degree", l.min_out_degree},
                      {"max_out_degree", l.max_out_degree}});
  }
  return {{"config_hash", Fingerprint::to_hex(r.config_hash)},
          {"cells_total", r.cells_total},
          {"cells_done", r.cells_done},
          {"skipped_cells", r.skipped_cells},
          {"halted", r.halted},
          {"resumed", r.resumed},
          {"seconds", r.seconds},
          {"layers", layers},
          {"warnings", r.warnings}};
}

TraceReport trace_report_from_json(const json& j) {
  try {
    TraceReport r;
    r.config_hash = std::stoull(j.at("config_hash").get<std::string>(), nullptr, 16);
    r.cells_total = j.at("cells_total").get<std::int64_t>();
    r.cells_done = j.at("cells_done").get<std::int64_t>();
    r.skipped_cells = j.at("skipped_cells").get<std::int64_t>();
    r.halted = j.at("halted").get<bool>();
    r.resumed = j.at("resumed").get<bool>();
    r.seconds = j.at("seconds").get<double>();
    for (const auto& l : j.at("layers")) {
      LayerTraceReport lr;
      lr.layer = l.at("layer").get<int>();
      lr.n_sources = l.at("n_sources").get<int>();
      lr.downstream_layers = l.at("downstream_layers").get<std::vector<int>>();
      lr.cells = l.at("cells").get<std::int64_t>();
      lr.passes = l.at("passes").get<std::int64_t>();
      lr.skipped_passes = l.at("skipped_passes").get<std::int64_t>();
      lr.seconds = l.at("seconds").get<double>();
      lr.edges = l.at("edges").get<std::int64_t>();
      lr.min_out_degree = l.at("min_out_degree").get<std::int64_t>();
      lr.max_out_degree = l.at("max_out_degree").get<std::int64_t>();
      r.layers.push_back(std::move(lr));
    }
    r.warnings = j.at("warnings").get<std::vector<std::string>>();
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed trace report: ") + e.what());
  } catch (const std::logic_error& e) {
    throw FormatError(std::string("malformed trace report: ") + e.what());
  }
}

json to_json(const RunReport& r) {
  json j = {{"condition", r.condition},
            {"label", r.label},
            {"seed", r.seed},
            {"config_hash", Fingerprint::to_hex(r.config_hash)},
            {"edges", to_json(r.summary)}};
  j["trace"] = r.trace ? to_json(*r.trace) : json(nullptr);
  return j;
}

TextTable table1(const std::vector<RunReport>& reports) {
  TextTable t;
  t.header = {"metric"};
  for (const auto& r : reports) t.header.push_back(r.condition);
  auto add = [&](const std::string& name, auto&& value) {
    std::vector<std::string> row{name};
    for (const auto& r : reports) row.push_back(value(r));
    t.rows.push_back(std::move(row));
  };
  add("condition", [](const RunReport& r) { return r.label; });
  add("total_edges", [](const RunReport& r) { return std::to_string(r.summary.total_edges); });
  add("source_features", [](const RunReport& r) { return std::to_string(r.summary.source_features); });
  add("target_features", [](const RunReport& r) { return std::to_string(r.summary.target_features); });
  add("target_coverage", [](const RunReport& r) { return cell(r.summary.target_coverage); });
  add("mean_abs_d", [](const RunReport& r) { return cell(r.summary.mean_abs_d); });
  add("median_abs_d", [](const RunReport& r) { return cell(r.summary.median_abs_d); });
  add("pct_abs_d_gt1", [](const RunReport& r) { return cell(r.summary.pct_abs_d_gt1); });
  add("pct_abs_d_gt2", [](const RunReport& r) { return cell(r.summary.pct_abs_d_gt2); });
  add("inhibitory_pct", [](const RunReport& r) { return cell(r.summary.inhibitory_pct); });
  add("coherence_pct", [](const RunReport& r) { return cell(r.summary.coherence_pct); });
  add("forward_passes", [](const RunReport& r) {
    if (!r.trace) return std::string();
    std::int64_t n = 0;
    for (const auto& l : r.trace->layers) n += l.passes;
    return std::to_string(n);
  });
  return t;
}

void write_json(const std::filesystem::path& path, const json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write " + path.string());
  os << j.dump(2) << '\n';
}

json read_json(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open " + path.string());
  try {
    return json::parse(is);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace circuits
