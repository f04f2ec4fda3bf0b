#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>

namespace connecte {

using Scalar = double;

// Row-major so one embedding occupies one contiguous row; checkpoints are
// written in the same row-major order.
template <typename S>
using MatrixT = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename S>
using VectorT = Eigen::Matrix<S, Eigen::Dynamic, 1>;

using Matrix = MatrixT<Scalar>;
using Vector = VectorT<Scalar>;

// Error taxonomy mirrors the CLI exit codes: config -> 1, data -> 2, numeric -> 3.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace connecte
