#include <doctest.h>

#include <fstream>

#include "connecte/checkpoint.hpp"
#include "connecte/manifest.hpp"
#include "test_util.hpp"

using namespace connecte;
using testutil::TempDir;
using testutil::read_file;
using testutil::write_file;

namespace {

Checkpoint sample_checkpoint(std::uint64_t seed) {
  Checkpoint c;
  c.config.kappa = 6;
  c.config.ell = 3;
  c.config.seed = seed;
  for (int i = 0; i < 5; ++i) c.entities.add("e" + std::to_string(i));
  for (int i = 0; i < 2; ++i) c.relations.add("r" + std::to_string(i));
  for (int i = 0; i < 4; ++i) c.types.add("/t/" + std::to_string(i));
  c.params = init_params(6, 3, 5, 2, 4, seed);
  return c;
}

}  // namespace

TEST_CASE("matrix file round-trips float32 content exactly") {
  TempDir tmp("ckpt");
  Matrix m(3, 4);
  Rng rng(1);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 4; ++j) m(i, j) = double(float(rng.uniform(-2, 2)));
  }
  write_matrix_file(tmp.file("m.mat"), m);
  Matrix back = read_matrix_file(tmp.file("m.mat"));
  CHECK(back == m);

  // Header: magic + u64 rows + u64 cols, then float32 payload.
  const std::string bytes = read_file(tmp.file("m.mat"));
  REQUIRE(bytes.size() == 24 + 3 * 4 * 4);
  CHECK(bytes.substr(0, 8) == "CONEMAT1");
  CHECK(static_cast<unsigned char>(bytes[8]) == 3);
  CHECK(static_cast<unsigned char>(bytes[16]) == 4);
}

TEST_CASE("save/load checkpoint reproduces params at float32 precision") {
  TempDir tmp("ckpt");
  Checkpoint c = sample_checkpoint(42);
  // Snap to float32 so the round trip is bitwise.
  c.params.entity = c.params.entity.cast<float>().cast<double>();
  c.params.type = c.params.type.cast<float>().cast<double>();
  c.params.rel_entity = c.params.rel_entity.cast<float>().cast<double>();
  c.params.rel_type = c.params.rel_type.cast<float>().cast<double>();
  c.params.proj = c.params.proj.cast<float>().cast<double>();

  save_checkpoint(c.params, c.config, c.entities, c.relations, c.types, tmp.file("ck"));
  Checkpoint back = load_checkpoint(tmp.file("ck"));
  CHECK(back.params.entity == c.params.entity);
  CHECK(back.params.type == c.params.type);
  CHECK(back.params.rel_entity == c.params.rel_entity);
  CHECK(back.params.rel_type == c.params.rel_type);
  CHECK(back.params.proj == c.params.proj);
  CHECK(back.config.seed == c.config.seed);
  CHECK(back.entities.names() == c.entities.names());
  CHECK(back.types.names() == c.types.names());
}

TEST_CASE("save is idempotent at the byte level after one round trip") {
  TempDir tmp("ckpt");
  Checkpoint c = sample_checkpoint(7);
  save_checkpoint(c.params, c.config, c.entities, c.relations, c.types, tmp.file("a"));
  Checkpoint once = load_checkpoint(tmp.file("a"));
  save_checkpoint(once.params, once.config, once.entities, once.relations, once.types,
                  tmp.file("b"));
  for (const char* name : {"entity.mat", "type.mat", "relation_entity.mat", "relation_type.mat",
                           "projection.mat", "manifest.json", "vocab_entity.tsv"}) {
    CHECK(read_file(tmp.file("a") + "/" + name) == read_file(tmp.file("b") + "/" + name));
  }
}

TEST_CASE("corrupted magic bytes fail the load") {
  TempDir tmp("ckpt");
  Checkpoint c = sample_checkpoint(3);
  save_checkpoint(c.params, c.config, c.entities, c.relations, c.types, tmp.file("ck"));

  std::string bytes = read_file(tmp.file("ck") + "/type.mat");
  bytes[0] = 'X';
  write_file(tmp.file("ck") + "/type.mat", bytes);
  CHECK_THROWS_WITH_AS(load_checkpoint(tmp.file("ck")), doctest::Contains("magic"), DataError);
}

TEST_CASE("truncated matrix data fails the load") {
  TempDir tmp("ckpt");
  Checkpoint c = sample_checkpoint(4);
  save_checkpoint(c.params, c.config, c.entities, c.relations, c.types, tmp.file("ck"));

  std::string bytes = read_file(tmp.file("ck") + "/entity.mat");
  bytes.resize(bytes.size() - 5);
  write_file(tmp.file("ck") + "/entity.mat", bytes);
  CHECK_THROWS_WITH_AS(load_checkpoint(tmp.file("ck")), doctest::Contains("truncated"),
                       DataError);
}

TEST_CASE("unsupported format version fails the load") {
  TempDir tmp("ckpt");
  Checkpoint c = sample_checkpoint(6);
  save_checkpoint(c.params, c.config, c.entities, c.relations, c.types, tmp.file("ck"));
  std::string manifest = read_file(tmp.file("ck") + "/manifest.json");
  const std::string needle = "\"format_version\": 1";
  auto pos = manifest.find(needle);
  REQUIRE(pos != std::string::npos);
  manifest.replace(pos, needle.size(), "\"format_version\": 99");
  write_file(tmp.file("ck") + "/manifest.json", manifest);
  CHECK_THROWS_WITH_AS(load_checkpoint(tmp.file("ck")), doctest::Contains("format version"),
                       DataError);
}

TEST_CASE("manifest dims edited to mismatch the file name the offending matrix") {
  TempDir tmp("ckpt");
  Checkpoint c = sample_checkpoint(5);
  save_checkpoint(c.params, c.config, c.entities, c.relations, c.types, tmp.file("ck"));

  std::string manifest = read_file(tmp.file("ck") + "/manifest.json");
  // relation_type.mat is 2 x 3; claim 2 x 4 in the manifest.
  const std::string needle = "\"relation_type.mat\": {\n      \"cols\": 3";
  auto pos = manifest.find(needle);
  REQUIRE(pos != std::string::npos);
  manifest.replace(pos, needle.size(), "\"relation_type.mat\": {\n      \"cols\": 4");
  write_file(tmp.file("ck") + "/manifest.json", manifest);

  CHECK_THROWS_WITH_AS(load_checkpoint(tmp.file("ck")), doctest::Contains("relation_type.mat"),
                       DataError);
}

TEST_CASE("fnv1a hashing is stable and sensitive") {
  const std::string a = "hello";
  const std::string b = "hellp";
  CHECK(fnv1a(a.data(), a.size()) == fnv1a(a.data(), a.size()));
  CHECK(fnv1a(a.data(), a.size()) != fnv1a(b.data(), b.size()));

  TempDir tmp("hash");
  write_file(tmp.file("f"), a);
  CHECK(fnv1a_file(tmp.file("f")) == fnv1a(a.data(), a.size()));
}

TEST_CASE("run manifest hash ignores wall clock but tracks inputs") {
  RunManifest m;
  m.command = "eval";
  m.config = {{"mode", "composite"}};
  m.inputs = {{"a.tsv", "00ff"}};
  m.seed = 9;
  m.wall_clock_seconds = 1.25;
  const std::string h1 = m.stable_hash();
  m.wall_clock_seconds = 99.0;
  CHECK(m.stable_hash() == h1);
  m.inputs[0].second = "00fe";
  CHECK(m.stable_hash() != h1);
}
