#include "connecte/kg.hpp"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace connecte {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return fields;
}

[[noreturn]] void parse_fail(const std::string& path, std::size_t lineno, std::size_t got,
                             std::size_t want) {
  std::ostringstream msg;
  msg << path << ":" << lineno << ": expected " << want << " tab-separated fields, got " << got;
  throw DataError(msg.str());
}

// Resolves a surface form under the missing-symbol policy; -1 means "skip
// this record".
int resolve(const std::string& surface, Vocab& vocab, MissingSymbol policy,
            const std::string& path, std::size_t lineno) {
  if (policy == MissingSymbol::Grow) return vocab.add(surface);
  if (auto id = vocab.find(surface)) return *id;
  if (policy == MissingSymbol::Skip) return -1;
  std::ostringstream msg;
  msg << path << ":" << lineno << ": unknown symbol '" << surface << "'";
  throw DataError(msg.str());
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.is_open()) throw DataError("cannot open " + path);
  return in;
}

template <class Record, class Parse>
std::vector<Record> load_tsv(const std::string& path, std::size_t n_fields, LoadStats* stats,
                             Parse parse) {
  std::ifstream in = open_input(path);
  std::vector<Record> records;
  std::string line;
  std::size_t lineno = 0;
  LoadStats local;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> fields = split_tabs(line);
    if (fields.size() != n_fields) parse_fail(path, lineno, fields.size(), n_fields);
    ++local.lines;
    if (auto rec = parse(fields, lineno)) {
      records.push_back(*rec);
    } else {
      ++local.skipped;
    }
  }
  if (stats) *stats = local;
  return records;
}

}  // namespace

std::vector<Triple> load_triples(const std::string& path, Vocab& entities, Vocab& relations,
                                 MissingSymbol policy, LoadStats* stats) {
  return load_tsv<Triple>(path, 3, stats,
                          [&](const std::vector<std::string>& f,
                              std::size_t lineno) -> std::optional<Triple> {
                            int h = resolve(f[0], entities, policy, path, lineno);
                            int r = resolve(f[1], relations, policy, path, lineno);
                            int t = resolve(f[2], entities, policy, path, lineno);
                            if (h < 0 || r < 0 || t < 0) return std::nullopt;
                            return Triple{h, r, t};
                          });
}

std::vector<TypeAssertion> load_type_assertions(const std::string& path, Vocab& entities,
                                                Vocab& types, MissingSymbol policy,
                                                LoadStats* stats) {
  return load_tsv<TypeAssertion>(path, 2, stats,
                                 [&](const std::vector<std::string>& f,
                                     std::size_t lineno) -> std::optional<TypeAssertion> {
                                   int e = resolve(f[0], entities, policy, path, lineno);
                                   int t = resolve(f[1], types, policy, path, lineno);
                                   if (e < 0 || t < 0) return std::nullopt;
                                   return TypeAssertion{e, t};
                                 });
}

std::vector<TypeTriple> load_type_triples(const std::string& path, Vocab& types, Vocab& relations,
                                          MissingSymbol policy, LoadStats* stats) {
  return load_tsv<TypeTriple>(path, 3, stats,
                              [&](const std::vector<std::string>& f,
                                  std::size_t lineno) -> std::optional<TypeTriple> {
                                int h = resolve(f[0], types, policy, path, lineno);
                                int r = resolve(f[1], relations, policy, path, lineno);
                                int t = resolve(f[2], types, policy, path, lineno);
                                if (h < 0 || r < 0 || t < 0) return std::nullopt;
                                return TypeTriple{h, r, t};
                              });
}

namespace {

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out.is_open()) throw DataError("cannot write " + path);
  return out;
}

}  // namespace

void write_triples(const std::string& path, const std::vector<Triple>& triples,
                   const Vocab& entities, const Vocab& relations) {
  std::ofstream out = open_output(path);
  for (const Triple& t : triples) {
    out << entities.name(t.head) << '\t' << relations.name(t.rel) << '\t' << entities.name(t.tail)
        << '\n';
  }
}

void write_type_assertions(const std::string& path, const std::vector<TypeAssertion>& assertions,
                           const Vocab& entities, const Vocab& types) {
  std::ofstream out = open_output(path);
  for (const TypeAssertion& a : assertions) {
    out << entities.name(a.entity) << '\t' << types.name(a.type) << '\n';
  }
}

void write_type_triples(const std::string& path, const std::vector<TypeTriple>& type_triples,
                        const Vocab& types, const Vocab& relations) {
  std::ofstream out = open_output(path);
  for (const TypeTriple& tt : type_triples) {
    out << types.name(tt.head_type) << '\t' << relations.name(tt.rel) << '\t'
        << types.name(tt.tail_type) << '\n';
  }
}

void write_vocab(const std::string& path, const Vocab& vocab) {
  std::ofstream out = open_output(path);
  for (int id = 0; id < vocab.size(); ++id) {
    out << id << '\t' << vocab.name(id) << '\n';
  }
}

Vocab load_vocab(const std::string& path) {
  std::ifstream in = open_input(path);
  Vocab vocab;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> fields = split_tabs(line);
    if (fields.size() != 2) parse_fail(path, lineno, fields.size(), 2);
    int id = vocab.add(fields[1]);
    if (id != std::stoi(fields[0])) {
      std::ostringstream msg;
      msg << path << ":" << lineno << ": non-contiguous or duplicate vocab id " << fields[0];
      throw DataError(msg.str());
    }
  }
  return vocab;
}

std::vector<std::vector<int>> types_of_entities(const std::vector<TypeAssertion>& assertions,
                                                int n_entities) {
  std::vector<std::vector<int>> types_of(static_cast<std::size_t>(n_entities));
  for (const TypeAssertion& a : assertions) {
    types_of[static_cast<std::size_t>(a.entity)].push_back(a.type);
  }
  for (auto& ts : types_of) {
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  }
  return types_of;
}

std::vector<TypeTriple> generate_type_triples(const std::vector<Triple>& triples,
                                              const std::vector<std::vector<int>>& types_of,
                                              int min_count, TypeTripleGenStats* stats) {
  // Candidates packed into 64 bits (21 bits per slot) so counting the raw
  // expansions stays a flat hash-map pass even at tens of millions.
  constexpr int kShift = 21;
  constexpr std::uint64_t kMask = (1ULL << kShift) - 1;
  int max_id = 0;
  for (const Triple& t : triples) max_id = std::max(max_id, t.rel);
  for (const auto& ts : types_of) {
    for (int t : ts) max_id = std::max(max_id, t);
  }
  if (static_cast<std::uint64_t>(max_id) > kMask) {
    throw DataError("generate_type_triples: ids exceed the 21-bit packing limit");
  }
  std::unordered_map<std::uint64_t, std::uint32_t> counts;
  TypeTripleGenStats local;

  for (const Triple& t : triples) {
    const auto& head_types = types_of[static_cast<std::size_t>(t.head)];
    const auto& tail_types = types_of[static_cast<std::size_t>(t.tail)];
    for (int th : head_types) {
      const std::uint64_t hi = (std::uint64_t(th) << (2 * kShift)) |
                               (std::uint64_t(t.rel) << kShift);
      for (int tt : tail_types) {
        ++counts[hi | std::uint64_t(tt)];
        ++local.expansions;
      }
    }
  }

  local.unique = counts.size();
  std::vector<TypeTriple> out;
  for (const auto& [key, count] : counts) {
    if (count >= static_cast<std::uint32_t>(min_count)) {
      out.push_back(TypeTriple{static_cast<int>(key >> (2 * kShift)),
                               static_cast<int>((key >> kShift) & kMask),
                               static_cast<int>(key & kMask)});
    }
  }
  std::sort(out.begin(), out.end(), [](const TypeTriple& a, const TypeTriple& b) {
    return std::tie(a.head_type, a.rel, a.tail_type) < std::tie(b.head_type, b.rel, b.tail_type);
  });
  local.surviving = out.size();
  if (stats) *stats = local;
  return out;
}

bool KnowledgeBase::has_true_type(int entity, int type) const {
  const auto& ts = true_types_all[static_cast<std::size_t>(entity)];
  return std::binary_search(ts.begin(), ts.end(), type);
}

KnowledgeBase build_kb(std::vector<Triple> train_triples,
                       std::vector<TypeAssertion> train_assertions,
                       const std::vector<TypeAssertion>& valid_assertions,
                       const std::vector<TypeAssertion>& test_assertions,
                       std::vector<TypeTriple> type_triples, int n_entities, int n_relations,
                       int n_types) {
  KnowledgeBase kb;
  kb.n_entities = n_entities;
  kb.n_relations = n_relations;
  kb.n_types = n_types;
  kb.triples = std::move(train_triples);
  kb.assertions = std::move(train_assertions);
  kb.type_triples = std::move(type_triples);

  kb.types_of = types_of_entities(kb.assertions, n_entities);

  kb.out_edges.resize(static_cast<std::size_t>(n_entities));
  kb.in_edges.resize(static_cast<std::size_t>(n_entities));
  for (const Triple& t : kb.triples) {
    kb.out_edges[static_cast<std::size_t>(t.head)].emplace_back(t.rel, t.tail);
    kb.in_edges[static_cast<std::size_t>(t.tail)].emplace_back(t.rel, t.head);
  }

  kb.true_types_all = kb.types_of;
  for (const auto* split : {&valid_assertions, &test_assertions}) {
    for (const TypeAssertion& a : *split) {
      kb.true_types_all[static_cast<std::size_t>(a.entity)].push_back(a.type);
    }
  }
  for (auto& ts : kb.true_types_all) {
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  }
  return kb;
}

}  // namespace connecte
