#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace connecte {

inline constexpr const char* kToolVersion = "0.1.0";

// FNV-1a, 64-bit.
std::uint64_t fnv1a(const void* data, std::size_t size,
                    std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a_file(const std::string& path);
std::string to_hex(std::uint64_t value);

// Provenance record written by every CLI run. The stable hash covers every
// reproducibility-relevant field but not wall-clock time, so reports that
// embed it stay byte-identical across reruns.
struct RunManifest {
  std::string tool_version = kToolVersion;
  std::string command;
  nlohmann::json config;
  std::vector<std::pair<std::string, std::string>> inputs;  // (path, content hash)
  std::uint64_t seed = 0;
  double wall_clock_seconds = 0.0;
  nlohmann::json extra;  // command-specific payload (counts, loss summary, ...)

  nlohmann::json to_json() const;
  std::string stable_hash() const;
  void write(const std::string& path) const;
};

}  // namespace connecte
