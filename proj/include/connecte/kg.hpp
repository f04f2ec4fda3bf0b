#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "connecte/types.hpp"
#include "connecte/vocab.hpp"

namespace connecte {

struct Triple {
  int head = 0;
  int rel = 0;
  int tail = 0;
  bool operator==(const Triple&) const = default;
};

struct TypeAssertion {
  int entity = 0;
  int type = 0;
  bool operator==(const TypeAssertion&) const = default;
};

struct TypeTriple {
  int head_type = 0;
  int rel = 0;
  int tail_type = 0;
  bool operator==(const TypeTriple&) const = default;
};

// What to do with a surface form that is not in the vocabulary.
enum class MissingSymbol { Error, Grow, Skip };

struct LoadStats {
  std::size_t lines = 0;    // records parsed (before skipping)
  std::size_t skipped = 0;  // records dropped under MissingSymbol::Skip
};

// TSV loaders: UTF-8, literal tab separators, no quoting. Malformed lines
// raise DataError with file:line context.
std::vector<Triple> load_triples(const std::string& path, Vocab& entities, Vocab& relations,
                                 MissingSymbol policy, LoadStats* stats = nullptr);
std::vector<TypeAssertion> load_type_assertions(const std::string& path, Vocab& entities,
                                                Vocab& types, MissingSymbol policy,
                                                LoadStats* stats = nullptr);
std::vector<TypeTriple> load_type_triples(const std::string& path, Vocab& types, Vocab& relations,
                                          MissingSymbol policy, LoadStats* stats = nullptr);

void write_triples(const std::string& path, const std::vector<Triple>& triples,
                   const Vocab& entities, const Vocab& relations);
void write_type_assertions(const std::string& path, const std::vector<TypeAssertion>& assertions,
                           const Vocab& entities, const Vocab& types);
void write_type_triples(const std::string& path, const std::vector<TypeTriple>& type_triples,
                        const Vocab& types, const Vocab& relations);

// Vocab dump format: id<TAB>surface per line.
void write_vocab(const std::string& path, const Vocab& vocab);
Vocab load_vocab(const std::string& path);

// Per-entity type sets (sorted, deduplicated) from training assertions.
std::vector<std::vector<int>> types_of_entities(const std::vector<TypeAssertion>& assertions,
                                                int n_entities);

struct TypeTripleGenStats {
  std::size_t expansions = 0;  // raw (head type x tail type) candidates, pre-dedup
  std::size_t unique = 0;      // distinct candidates
  std::size_t surviving = 0;   // distinct candidates with count >= min_count
};

// Replaces both entities of every triple by each of their types and keeps
// the distinct type triples generated at least min_count times. Frequency is
// counted over the raw expansions, before deduplication. Output is sorted by
// (head_type, rel, tail_type) id.
std::vector<TypeTriple> generate_type_triples(const std::vector<Triple>& triples,
                                              const std::vector<std::vector<int>>& types_of,
                                              int min_count,
                                              TypeTripleGenStats* stats = nullptr);

struct KnowledgeBase {
  int n_entities = 0;
  int n_relations = 0;
  int n_types = 0;

  std::vector<Triple> triples;              // D
  std::vector<TypeAssertion> assertions;    // H (train)
  std::vector<TypeTriple> type_triples;     // Z

  std::vector<std::vector<int>> types_of;   // train types per entity, sorted
  std::vector<std::vector<std::pair<int, int>>> out_edges;  // entity -> (rel, tail)
  std::vector<std::vector<std::pair<int, int>>> in_edges;   // entity -> (rel, head)

  // Union over train/valid/test assertions; drives the filtered ranking
  // protocol. Sorted per entity.
  std::vector<std::vector<int>> true_types_all;

  bool has_true_type(int entity, int type) const;
};

KnowledgeBase build_kb(std::vector<Triple> train_triples,
                       std::vector<TypeAssertion> train_assertions,
                       const std::vector<TypeAssertion>& valid_assertions,
                       const std::vector<TypeAssertion>& test_assertions,
                       std::vector<TypeTriple> type_triples, int n_entities, int n_relations,
                       int n_types);

}  // namespace connecte
