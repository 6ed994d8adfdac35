#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace wudalab {

// Row-major so each matrix row is one sample and serialization order matches
// the on-disk checkpoint layout.
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = MatrixX<double>;
using Vector = VectorX<double>;

using MatrixRef = Eigen::Ref<const Matrix>;
using VectorRef = Eigen::Ref<const Vector>;

enum class Mode { kTrain, kEval };

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

inline void check_finite(const MatrixRef& m, const char* what) {
  if (!m.allFinite()) {
    throw std::runtime_error(std::string("non-finite values in ") + what);
  }
}

inline std::string shape_of(const MatrixRef& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace wudalab
