#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace connecte {

// Bijective surface-string <-> dense-id map. Ids are assigned in first-seen
// order and stay contiguous in [0, size).
class Vocab {
 public:
  int add(const std::string& name) {
    auto it = index_.find(name);
    if (it != index_.end()) return it->second;
    int id = static_cast<int>(names_.size());
    names_.push_back(name);
    index_.emplace(name, id);
    return id;
  }

  std::optional<int> find(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  const std::string& name(int id) const { return names_.at(static_cast<std::size_t>(id)); }

  int size() const { return static_cast<int>(names_.size()); }
  bool empty() const { return names_.empty(); }

  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace connecte
