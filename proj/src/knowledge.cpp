// SPDX-License-Identifier: Apache-2.0

#include "circuits/knowledge.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <unordered_map>

#include <json.hpp>

namespace circuits {

CoherenceResult coherence_fraction(const CircuitGraph& g, const AnnotationCatalog& catalog) {
  CoherenceResult r;
  r.total_edges = static_cast<std::int64_t>(g.size());
  for (const auto& e : g.edges()) {
    const auto& a = catalog.term_ids(e.source);
    const auto& b = catalog.term_ids(e.target);
    if (a.empty() || b.empty()) continue;
    ++r.annotated_edges;
    // Both lists are sorted; stop at the first shared id.
    auto i = a.begin();
    auto j = b.begin();
    while (i != a.end() && j != b.end()) {
      if (*i < *j) {
        ++i;
      } else if (*j < *i) {
        ++j;
      } else {
        ++r.coherent_edges;
        break;
      }
    }
  }
  if (r.annotated_edges > 0) r.fraction = static_cast<double>(r.coherent_edges) / static_cast<double>(r.annotated_edges);
  return r;
}

// ---------------------------------------------------------------------------

std::set<DomainKey> DomainPairTable::keys() const {
  std::set<DomainKey> out;
  for (const auto& [k, _] : pairs) out.insert(k);
  return out;
}

DomainPairTable domain_pairs(const CircuitGraph& g, const AnnotationCatalog& catalog, const std::string& condition) {
  DomainPairTable t;
  t.total_edges = static_cast<std::int64_t>(g.size());
  for (const auto& e : g.edges()) {
    const auto s = catalog.primary_domain(e.source);
    const auto d = catalog.primary_domain(e.target);
    if (!s || !d) continue;
    ++t.annotated_edges;
    auto& p = t.pairs[{*s, *d}];
    p.source = *s;
    p.target = *d;
    ++p.support;
    p.sum_abs_d += std::abs(e.d);
    p.sum_source_layer += e.source.layer;
    p.sum_delta_layer += e.target.layer - e.source.layer;
    if (!condition.empty()) p.conditions.insert(condition);
  }
  return t;
}

DomainPairTable merge_domain_pairs(const std::vector<DomainPairTable>& tables) {
  DomainPairTable out;
  for (const auto& t : tables) {
    out.total_edges += t.total_edges;
    out.annotated_edges += t.annotated_edges;
    for (const auto& [k, p] : t.pairs) {
      auto& m = out.pairs[k];
      m.source = p.source;
      m.target = p.target;
      m.support += p.support;
      m.sum_abs_d += p.sum_abs_d;
      m.sum_source_layer += p.sum_source_layer;
      m.sum_delta_layer += p.sum_delta_layer;
      m.conditions.insert(p.conditions.begin(), p.conditions.end());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Consensus

namespace {

// Counts distinct pair ids present in every group. Each call uses a fresh
// stamp base so the mark array never needs clearing.
class IntersectionCounter {
 public:
  IntersectionCounter(std::size_t n_domains, std::size_t n_groups) : n_domains_(n_domains), n_groups_(n_groups) {
    if (n_domains * n_domains <= (std::size_t{1} << 22)) dense_.assign(n_domains * n_domains, 0);
  }

  std::int64_t count(const std::vector<std::vector<int>>& src, const std::vector<std::vector<int>>& tgt) {
    ++round_;
    const auto base = static_cast<std::uint32_t>(round_ * n_groups_);
    std::int64_t hits = 0;
    if (dense_.empty()) sparse_.clear();
    for (std::size_t g = 0; g < n_groups_; ++g) {
      const auto& s = src[g];
      const auto& t = tgt[g];
      for (std::size_t i = 0; i < s.size(); ++i) {
        const std::size_t id = static_cast<std::size_t>(s[i]) * n_domains_ + static_cast<std::size_t>(t[i]);
        std::uint32_t& m = dense_.empty() ? sparse_[id] : dense_[id];
        if (g == 0) {
          if (m != base + 1) {
            m = base + 1;
            if (n_groups_ == 1) ++hits;
          }
        } else if (m == base + g) {
          m = base + g + 1;
          if (g + 1 == n_groups_) ++hits;
        }
      }
    }
    return hits;
  }

 private:
  std::size_t n_domains_;
  std::size_t n_groups_;
  std::uint64_t round_ = 0;
  std::vector<std::uint32_t> dense_;
  std::unordered_map<std::size_t, std::uint32_t> sparse_;
};

}  // namespace

ConsensusResult consensus_pairs(const std::vector<ModelGroup>& groups, const ConsensusOptions& options) {
  if (groups.size() < 2) throw ConfigError("consensus needs at least two model groups");
  const auto G = groups.size();
  std::vector<DomainPairTable> merged;
  for (const auto& g : groups) merged.push_back(merge_domain_pairs(g.conditions));

  ConsensusResult r;
  for (const auto& m : merged) r.group_pair_counts.push_back(static_cast<std::int64_t>(m.pairs.size()));
  for (const auto& [key, first] : merged[0].pairs) {
    bool everywhere = true;
    for (std::size_t g = 1; g < G && everywhere; ++g) everywhere = merged[g].pairs.contains(key);
    if (!everywhere) continue;
    ConsensusPair cp;
    cp.source = key.first;
    cp.target = key.second;
    cp.high_confidence = true;
    for (std::size_t g = 0; g < G; ++g) {
      const auto& p = merged[g].pairs.at(key);
      cp.support.push_back(p.support);
      cp.mean_abs_d.push_back(p.mean_abs_d());
      if (!(p.mean_abs_d() > options.high_confidence_d)) cp.high_confidence = false;
    }
    if (cp.high_confidence) ++r.high_confidence;
    r.pairs.push_back(std::move(cp));
  }

  // Intern domains and expand each group's pairs by support.
  std::map<std::string, int> ids;
  auto intern = [&](const std::string& s) { return ids.try_emplace(s, static_cast<int>(ids.size())).first->second; };
  std::vector<std::vector<int>> src(G), tgt(G);
  for (std::size_t g = 0; g < G; ++g) {
    for (const auto& [key, p] : merged[g].pairs) {
      const int a = intern(key.first), b = intern(key.second);
      for (std::int64_t k = 0; k < p.support; ++k) {
        src[g].push_back(a);
        tgt[g].push_back(b);
      }
    }
  }
  IntersectionCounter counter(ids.size(), G);
  const auto observed = static_cast<double>(counter.count(src, tgt));
  auto shuffled = tgt;
  r.enrichment = permutation_enrichment(
      observed,
      [&](Rng& rng) {
        for (std::size_t g = 0; g < G; ++g) {
          shuffled[g] = tgt[g];
          rng.shuffle(std::span<int>(shuffled[g]));
        }
        return static_cast<double>(counter.count(src, shuffled));
      },
      options.n_perms, options.seed);
  return r;
}

std::set<DomainKey> consensus_keys(const ConsensusResult& result) {
  std::set<DomainKey> out;
  for (const auto& p : result.pairs) out.insert({p.source, p.target});
  return out;
}

// ---------------------------------------------------------------------------
// Novelty

KnownBiologyGraph KnownBiologyGraph::build(const std::map<std::string, std::vector<std::string>>& domain_genes) {
  std::map<std::string, std::vector<std::string>> by_gene;
  for (const auto& [domain, genes] : domain_genes) {
    std::set<std::string> uniq(genes.begin(), genes.end());
    for (const auto& g : uniq) by_gene[g].push_back(domain);
  }
  std::map<std::pair<std::string, std::string>, std::size_t> shared;
  for (const auto& [gene, domains] : by_gene) {
    for (std::size_t i = 0; i < domains.size(); ++i) {
      for (std::size_t j = i; j < domains.size(); ++j) {
        const auto& a = domains[i];
        const auto& b = domains[j];
        ++shared[a <= b ? std::make_pair(a, b) : std::make_pair(b, a)];
      }
    }
  }
  KnownBiologyGraph kg;
  for (const auto& [pair, n] : shared) {
    if (n >= kMinSharedGenes) kg.links_.insert(pair);
  }
  return kg;
}

bool KnownBiologyGraph::linked(const std::string& a, const std::string& b) const {
  return links_.contains(a <= b ? std::make_pair(a, b) : std::make_pair(b, a));
}

std::map<std::string, std::vector<std::string>> load_domain_genes(const std::filesystem::path& path) {
  const auto t = TextTable::load(path, '\t');
  const auto ct = t.column("term"), cg = t.column("gene");
  std::map<std::string, std::vector<std::string>> out;
  for (const auto& r : t.rows) out[r[ct]].push_back(r[cg]);
  return out;
}

void save_domain_genes(const std::filesystem::path& path, const std::map<std::string, std::vector<std::string>>& genes) {
  TextTable t{{}, {"term", "gene"}, {}};
  for (const auto& [term, list] : genes) {
    for (const auto& g : list) t.rows.push_back({term, g});
  }
  t.save(path, '\t');
}

NovelResult novel_pairs(const DomainPairTable& merged, const KnownBiologyGraph& known, std::size_t n_conditions) {
  NovelResult r;
  for (const auto& [key, p] : merged.pairs) {
    r.annotated_edges += p.support;
    if (known.linked(key.first, key.second)) continue;
    r.novel_edges += p.support;
    r.novel.push_back(p);
    if (n_conditions > 0 && p.conditions.size() == n_conditions) r.all_conditions.push_back(p);
  }
  if (r.annotated_edges > 0) r.novel_fraction = static_cast<double>(r.novel_edges) / static_cast<double>(r.annotated_edges);
  return r;
}

// ---------------------------------------------------------------------------

Hierarchy process_hierarchy(const DomainPairTable& table) {
  Hierarchy h;
  std::map<std::string, std::pair<double, std::int64_t>> layers;
  for (const auto& [key, p] : table.pairs) {
    auto& [sum, n] = layers[key.first];
    sum += p.sum_source_layer;
    n += p.support;
    h.pairs.push_back(p);
  }
  for (const auto& [domain, v] : layers) h.domains.push_back({domain, v.first / static_cast<double>(v.second), v.second});
  std::stable_sort(h.domains.begin(), h.domains.end(),
                   [](const DomainLayer& a, const DomainLayer& b) { return a.mean_source_layer < b.mean_source_layer; });
  return h;
}

std::vector<DomainKey> feedback_loops(const DomainPairTable& table) {
  std::vector<DomainKey> out;
  for (const auto& [key, _] : table.pairs) {
    if (key.first < key.second && table.pairs.contains({key.second, key.first})) out.push_back(key);
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

bool matches_keyword(const std::string& label, const std::vector<std::string>& keywords) {
  const auto l = lower(label);
  return std::any_of(keywords.begin(), keywords.end(), [&](const std::string& k) {
    return !k.empty() && l.find(lower(k)) != std::string::npos;
  });
}

KeywordSets load_keywords(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(is).get<KeywordSets>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void save_keywords(const std::filesystem::path& path, const KeywordSets& sets) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw ConfigError("cannot write " + path.string());
  os << nlohmann::json(sets).dump(2) << '\n';
}

std::pair<std::set<DomainKey>, std::set<DomainKey>> split_specific_shared(const std::set<DomainKey>& condition_pairs,
                                                                         const std::set<DomainKey>& reference_pairs) {
  std::set<DomainKey> specific, shared;
  for (const auto& k : condition_pairs) (reference_pairs.contains(k) ? shared : specific).insert(k);
  return {std::move(specific), std::move(shared)};
}

std::vector<TissueRow> tissue_enrichment(const std::set<DomainKey>& specific, const std::set<DomainKey>& shared,
                                         const KeywordSets& keywords) {
  std::vector<TissueRow> rows;
  for (const auto& [tissue, kws] : keywords) {
    auto related = [&](const DomainKey& k) { return matches_keyword(k.first, kws) || matches_keyword(k.second, kws); };
    TissueRow row;
    row.tissue = tissue;
    for (const auto& k : specific) ++row.counts[0][related(k) ? 0 : 1];
    for (const auto& k : shared) ++row.counts[1][related(k) ? 0 : 1];
    row.fisher = fisher_exact(row.counts);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace circuits
