#include "connecte/manifest.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "connecte/types.hpp"

namespace connecte {

using nlohmann::json;

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t seed) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t hash = seed;
  for (std::size_t i = 0; i < size; ++i) {
    hash ^= bytes[i];
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::uint64_t fnv1a_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.is_open()) throw DataError("cannot open " + path);
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  char buffer[1 << 16];
  while (in.read(buffer, sizeof(buffer)) || in.gcount() > 0) {
    hash = fnv1a(buffer, static_cast<std::size_t>(in.gcount()), hash);
  }
  return hash;
}

std::string to_hex(std::uint64_t value) {
  std::ostringstream out;
  out << std::hex << std::setfill('0') << std::setw(16) << value;
  return out.str();
}

namespace {

json stable_fields(const RunManifest& m) {
  json inputs = json::array();
  for (const auto& [path, hash] : m.inputs) {
    inputs.push_back({{"path", path}, {"hash", hash}});
  }
  return json{{"tool_version", m.tool_version},
              {"command", m.command},
              {"config", m.config},
              {"inputs", inputs},
              {"seed", m.seed},
              {"extra", m.extra}};
}

}  // namespace

json RunManifest::to_json() const {
  json j = stable_fields(*this);
  j["wall_clock_seconds"] = wall_clock_seconds;
  j["manifest_hash"] = stable_hash();
  return j;
}

std::string RunManifest::stable_hash() const {
  // Wall-clock time is excluded so reruns of the same command produce the
  // same hash (and therefore byte-identical reports).
  const std::string canonical = stable_fields(*this).dump();
  return to_hex(fnv1a(canonical.data(), canonical.size()));
}

void RunManifest::write(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out.is_open()) throw DataError("cannot write " + path);
  out << to_json().dump(2) << '\n';
}

}  // namespace connecte
