#include "connecte/checkpoint.hpp"

#include <array>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

#include <json.hpp>

#include "connecte/kg.hpp"

namespace connecte {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void put_u64_le(std::ofstream& out, std::uint64_t v) {
  std::array<unsigned char, 8> b;
  for (int i = 0; i < 8; ++i) b[static_cast<std::size_t>(i)] = (v >> (8 * i)) & 0xFF;
  out.write(reinterpret_cast<const char*>(b.data()), 8);
}

std::uint64_t get_u64_le(std::ifstream& in) {
  std::array<unsigned char, 8> b;
  in.read(reinterpret_cast<char*>(b.data()), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[static_cast<std::size_t>(i)]) << (8 * i);
  return v;
}

constexpr std::array<const char*, 5> kMatrixFiles = {
    "entity.mat", "type.mat", "relation_entity.mat", "relation_type.mat", "projection.mat"};

json config_to_json(const TrainConfig& c) {
  return json{{"alpha", c.alpha},
              {"gamma1", c.gamma1},
              {"gamma2", c.gamma2},
              {"gamma3", c.gamma3},
              {"kappa", c.kappa},
              {"ell", c.ell},
              {"lambda", c.lambda_weight},
              {"epochs", c.epochs},
              {"batch_size", c.batch_size},
              {"seed", c.seed},
              {"neg_per_pos", c.neg_per_pos},
              {"threads", c.threads},
              {"adagrad_eps", c.adagrad_eps},
              {"init_bound", c.init_bound}};
}

TrainConfig config_from_json(const json& j) {
  TrainConfig c;
  c.alpha = j.at("alpha").get<double>();
  c.gamma1 = j.at("gamma1").get<double>();
  c.gamma2 = j.at("gamma2").get<double>();
  c.gamma3 = j.at("gamma3").get<double>();
  c.kappa = j.at("kappa").get<int>();
  c.ell = j.at("ell").get<int>();
  c.lambda_weight = j.at("lambda").get<double>();
  c.epochs = j.at("epochs").get<int>();
  c.batch_size = j.at("batch_size").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.neg_per_pos = j.at("neg_per_pos").get<int>();
  c.threads = j.value("threads", 1);
  c.adagrad_eps = j.value("adagrad_eps", 1e-8);
  c.init_bound = j.value("init_bound", 0.0);
  return c;
}

}  // namespace

void write_matrix_file(const std::string& path, const Matrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out.is_open()) throw DataError("cannot write " + path);
  out.write(kMatrixMagic, sizeof(kMatrixMagic));
  put_u64_le(out, static_cast<std::uint64_t>(m.rows()));
  put_u64_le(out, static_cast<std::uint64_t>(m.cols()));
  // Values persist as float32; training keeps doubles internally.
  std::vector<float> row(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      row[static_cast<std::size_t>(j)] = static_cast<float>(m(i, j));
    }
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
  if (!out.good()) throw DataError("short write on " + path);
}

Matrix read_matrix_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.is_open()) throw DataError("cannot open " + path);
  char magic[sizeof(kMatrixMagic)];
  in.read(magic, sizeof(magic));
  if (!in.good() || std::memcmp(magic, kMatrixMagic, sizeof(magic)) != 0) {
    throw DataError(path + ": bad matrix magic");
  }
  const std::uint64_t rows = get_u64_le(in);
  const std::uint64_t cols = get_u64_le(in);
  if (!in.good()) throw DataError(path + ": truncated header");

  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  std::vector<float> row(cols);
  for (std::uint64_t i = 0; i < rows; ++i) {
    in.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(cols * sizeof(float)));
    if (in.gcount() != static_cast<std::streamsize>(cols * sizeof(float))) {
      throw DataError(path + ": truncated matrix data");
    }
    for (std::uint64_t j = 0; j < cols; ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
    }
  }
  // Trailing bytes mean the file does not match its header.
  char extra;
  in.read(&extra, 1);
  if (!in.eof()) throw DataError(path + ": trailing bytes after matrix data");
  return m;
}

void save_checkpoint(const ModelParams& params, const TrainConfig& config, const Vocab& entities,
                     const Vocab& relations, const Vocab& types, const std::string& dir) {
  fs::create_directories(dir);
  const fs::path base(dir);

  json manifest;
  manifest["format_version"] = kCheckpointFormatVersion;
  manifest["dims"] = {{"kappa", params.kappa()}, {"ell", params.ell()}};
  manifest["sizes"] = {{"entities", entities.size()},
                       {"relations", relations.size()},
                       {"types", types.size()}};
  manifest["config"] = config_to_json(config);

  const Matrix* mats[5] = {&params.entity, &params.type, &params.rel_entity, &params.rel_type,
                           &params.proj};
  json files = json::object();
  for (int i = 0; i < 5; ++i) {
    files[kMatrixFiles[static_cast<std::size_t>(i)]] = {{"rows", mats[i]->rows()},
                                                        {"cols", mats[i]->cols()}};
    write_matrix_file((base / kMatrixFiles[static_cast<std::size_t>(i)]).string(), *mats[i]);
  }
  manifest["matrices"] = files;

  write_vocab((base / "vocab_entity.tsv").string(), entities);
  write_vocab((base / "vocab_relation.tsv").string(), relations);
  write_vocab((base / "vocab_type.tsv").string(), types);

  std::ofstream out(base / "manifest.json", std::ios::binary);
  if (!out.is_open()) throw DataError("cannot write checkpoint manifest in " + dir);
  out << manifest.dump(2) << '\n';
}

Checkpoint load_checkpoint(const std::string& dir) {
  const fs::path base(dir);
  std::ifstream in(base / "manifest.json", std::ios::binary);
  if (!in.is_open()) throw DataError("no checkpoint manifest in " + dir);
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw DataError(dir + "/manifest.json: " + e.what());
  }
  if (manifest.value("format_version", -1) != kCheckpointFormatVersion) {
    throw DataError(dir + ": unsupported checkpoint format version");
  }

  Checkpoint ckpt;
  try {
    ckpt.config = config_from_json(manifest.at("config"));
    ckpt.entities = load_vocab((base / "vocab_entity.tsv").string());
    ckpt.relations = load_vocab((base / "vocab_relation.tsv").string());
    ckpt.types = load_vocab((base / "vocab_type.tsv").string());

    Matrix* mats[5] = {&ckpt.params.entity, &ckpt.params.type, &ckpt.params.rel_entity,
                       &ckpt.params.rel_type, &ckpt.params.proj};
    for (int i = 0; i < 5; ++i) {
      const std::string name = kMatrixFiles[static_cast<std::size_t>(i)];
      const json& meta = manifest.at("matrices").at(name);
      Matrix m = read_matrix_file((base / name).string());
      if (m.rows() != meta.at("rows").get<Eigen::Index>() ||
          m.cols() != meta.at("cols").get<Eigen::Index>()) {
        throw DataError(name + ": dimensions do not match the checkpoint manifest");
      }
      *mats[i] = std::move(m);
    }

    const json& sizes = manifest.at("sizes");
    if (ckpt.entities.size() != sizes.at("entities").get<int>() ||
        ckpt.relations.size() != sizes.at("relations").get<int>() ||
        ckpt.types.size() != sizes.at("types").get<int>()) {
      throw DataError(dir + ": vocabulary sizes do not match the checkpoint manifest");
    }
  } catch (const json::exception& e) {
    throw DataError(dir + "/manifest.json: " + e.what());
  }
  if (ckpt.params.entity.rows() != ckpt.entities.size() ||
      ckpt.params.type.rows() != ckpt.types.size() ||
      ckpt.params.rel_entity.rows() != ckpt.relations.size() ||
      ckpt.params.rel_type.rows() != ckpt.relations.size() ||
      ckpt.params.proj.rows() != ckpt.params.type.cols() ||
      ckpt.params.proj.cols() != ckpt.params.entity.cols()) {
    throw DataError(dir + ": matrix shapes are inconsistent with the vocabularies");
  }
  return ckpt;
}

}  // namespace connecte
