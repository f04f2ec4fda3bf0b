#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "connecte/kg.hpp"
#include "connecte/rng.hpp"

namespace testutil {

// Self-cleaning scratch directory under the system temp path.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<unsigned> counter{0};
    dir_ = std::filesystem::temp_directory_path() /
           (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(dir_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(dir_, ec);
  }
  const std::filesystem::path& path() const { return dir_; }
  std::string file(const std::string& name) const { return (dir_ / name).string(); }

 private:
  std::filesystem::path dir_;
};

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// Random knowledge base with every entity typed, suitable for scoring and
// training tests.
inline connecte::KnowledgeBase random_kb(connecte::Rng& rng, int n_entities, int n_relations,
                                         int n_types, int n_triples) {
  using namespace connecte;
  std::vector<Triple> triples;
  for (int i = 0; i < n_triples; ++i) {
    triples.push_back(Triple{static_cast<int>(rng.below(n_entities)),
                             static_cast<int>(rng.below(n_relations)),
                             static_cast<int>(rng.below(n_entities))});
  }
  std::vector<TypeAssertion> assertions;
  for (int e = 0; e < n_entities; ++e) {
    assertions.push_back(TypeAssertion{e, static_cast<int>(rng.below(n_types))});
    if (rng.flip()) {
      assertions.push_back(TypeAssertion{e, static_cast<int>(rng.below(n_types))});
    }
  }
  std::vector<TypeTriple> type_triples =
      generate_type_triples(triples, types_of_entities(assertions, n_entities), 1);
  return build_kb(std::move(triples), std::move(assertions), {}, {}, std::move(type_triples),
                  n_entities, n_relations, n_types);
}

}  // namespace testutil
