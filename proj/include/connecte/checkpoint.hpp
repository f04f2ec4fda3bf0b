#pragma once

#include <string>

#include "connecte/model.hpp"
#include "connecte/vocab.hpp"

namespace connecte {

// Checkpoint directory layout:
//   manifest.json        dims, vocab sizes, config echo, format version
//   vocab_entity.tsv     id<TAB>surface
//   vocab_relation.tsv
//   vocab_type.tsv
//   entity.mat type.mat relation_entity.mat relation_type.mat projection.mat
//
// Each .mat file: 8-byte magic "CONEMAT1", then rows and cols as unsigned
// 64-bit little-endian, then rows*cols IEEE-754 single-precision values in
// row-major little-endian order.
inline constexpr char kMatrixMagic[8] = {'C', 'O', 'N', 'E', 'M', 'A', 'T', '1'};
inline constexpr int kCheckpointFormatVersion = 1;

struct Checkpoint {
  ModelParams params;
  TrainConfig config;
  Vocab entities;
  Vocab relations;
  Vocab types;
};

void save_checkpoint(const ModelParams& params, const TrainConfig& config, const Vocab& entities,
                     const Vocab& relations, const Vocab& types, const std::string& dir);

// Throws DataError on magic/version mismatch, dimension mismatch against the
// manifest (naming the offending matrix), or truncated files. Never returns
// partial state.
Checkpoint load_checkpoint(const std::string& dir);

void write_matrix_file(const std::string& path, const Matrix& m);
Matrix read_matrix_file(const std::string& path);

}  // namespace connecte
