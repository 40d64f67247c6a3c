// SPDX-License-Identifier: Apache-2.0

#include "circuits/catalog.hpp"

#include <algorithm>
#include <map>

#include "circuits/table_io.hpp"

namespace circuits {

const char* to_string(Ontology o) {
  switch (o) {
    case Ontology::GoBp: return "GO-BP";
    case Ontology::Kegg: return "KEGG";
    case Ontology::Reactome: return "Reactome";
    case Ontology::String: return "STRING";
    case Ontology::Trrust: return "TRRUST";
  }
  return "unknown";
}

Ontology parse_ontology(std::string_view text) {
  for (auto o : {Ontology::GoBp, Ontology::Kegg, Ontology::Reactome, Ontology::String, Ontology::Trrust}) {
    if (text == to_string(o)) return o;
  }
  throw FormatError("unknown ontology '" + std::string(text) + "'");
}

int AnnotationCatalog::intern(Ontology o, const std::string& term) {
  std::string key = to_string(o);
  key += '\t';
  key += term;
  auto [it, inserted] = term_index_.try_emplace(std::move(key), static_cast<int>(term_index_.size()));
  return it->second;
}

void AnnotationCatalog::add_annotation(const FeatureId& feature, Annotation annotation) {
  if (!(annotation.p_value > 0.0 && annotation.p_value <= 1.0)) {
    throw ConfigError("annotation p-value for " + feature.str() + " outside (0, 1]");
  }
  auto& e = entries_[feature];
  const int id = intern(annotation.ontology, annotation.term);
  auto pos = std::lower_bound(e.term_ids.begin(), e.term_ids.end(), id);
  if (pos == e.term_ids.end() || *pos != id) e.term_ids.insert(pos, id);
  e.annotations.push_back(std::move(annotation));
}

void AnnotationCatalog::set_genes(const FeatureId& feature, std::vector<std::string> ranked_genes) {
  entries_[feature].genes = std::move(ranked_genes);
}

bool AnnotationCatalog::annotated(const FeatureId& feature) const {
  auto it = entries_.find(feature);
  return it != entries_.end() && !it->second.annotations.empty();
}

const std::vector<Annotation>& AnnotationCatalog::annotations(const FeatureId& feature) const {
  static const std::vector<Annotation> none;
  auto it = entries_.find(feature);
  return it == entries_.end() ? none : it->second.annotations;
}

const std::vector<std::string>& AnnotationCatalog::genes(const FeatureId& feature) const {
  static const std::vector<std::string> none;
  auto it = entries_.find(feature);
  return it == entries_.end() ? none : it->second.genes;
}

const std::vector<int>& AnnotationCatalog::term_ids(const FeatureId& feature) const {
  static const std::vector<int> none;
  auto it = entries_.find(feature);
  return it == entries_.end() ? none : it->second.term_ids;
}

std::optional<std::string> AnnotationCatalog::primary_domain(const FeatureId& feature) const {
  const Annotation* best = nullptr;
  for (const auto& a : annotations(feature)) {
    if (a.ontology != Ontology::GoBp) continue;
    if (!best || a.p_value < best->p_value || (a.p_value == best->p_value && a.term < best->term)) best = &a;
  }
  if (!best) return std::nullopt;
  return best->term;
}

std::vector<FeatureId> AnnotationCatalog::features_at_layer(int layer) const {
  std::vector<FeatureId> out;
  for (const auto& [id, _] : entries_) {
    if (id.layer == layer) out.push_back(id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<FeatureId> AnnotationCatalog::features() const {
  std::vector<FeatureId> out;
  out.reserve(entries_.size());
  for (const auto& [id, _] : entries_) out.push_back(id);
  std::sort(out.begin(), out.end());
  return out;
}

bool AnnotationCatalog::covers_layer(int layer) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const auto& kv) { return kv.first.layer == layer; });
}

AnnotationCatalog AnnotationCatalog::load(const std::filesystem::path& annotations,
                                          const std::optional<std::filesystem::path>& gene_lists) {
  AnnotationCatalog cat;
  const auto t = TextTable::load(annotations, '\t');
  const auto cf = t.column("feature_id"), co = t.column("ontology"), ct = t.column("term"), cp = t.column("p_value");
  for (const auto& r : t.rows) {
    cat.add_annotation(FeatureId::parse(r[cf]), {parse_ontology(r[co]), r[ct], parse_double(r[cp])});
  }
  if (gene_lists) {
    const auto g = TextTable::load(*gene_lists, '\t');
    const auto gf = g.column("feature_id"), gr = g.column("rank"), gg = g.column("gene");
    std::map<FeatureId, std::vector<std::pair<long long, std::string>>> ranked;
    for (const auto& r : g.rows) ranked[FeatureId::parse(r[gf])].emplace_back(parse_int64(r[gr]), r[gg]);
    for (auto& [id, list] : ranked) {
      std::sort(list.begin(), list.end());
      std::vector<std::string> genes;
      for (std::size_t i = 0; i < list.size(); ++i) {
        if (list[i].first != static_cast<long long>(i) + 1) {
          throw FormatError(gene_lists->string() + ": ranks for " + id.str() + " are not contiguous from 1");
        }
        genes.push_back(std::move(list[i].second));
      }
      cat.set_genes(id, std::move(genes));
    }
  }
  return cat;
}

void AnnotationCatalog::save(const std::filesystem::path& annotations, const std::filesystem::path& gene_lists) const {
  TextTable a{{}, {"feature_id", "ontology", "term", "p_value"}, {}};
  TextTable g{{}, {"feature_id", "rank", "gene"}, {}};
  for (const auto& id : features()) {
    const auto& e = entries_.at(id);
    for (const auto& ann : e.annotations) a.rows.push_back({id.str(), to_string(ann.ontology), ann.term, format_double(ann.p_value)});
    for (std::size_t i = 0; i < e.genes.size(); ++i) g.rows.push_back({id.str(), std::to_string(i + 1), e.genes[i]});
  }
  a.save(annotations, '\t');
  g.save(gene_lists, '\t');
}

}  // namespace circuits
