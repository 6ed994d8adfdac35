#include "wudalab/nn/loss.hpp"

#include <cmath>

namespace wudalab {

Vector log_sum_exp(const MatrixRef& logits) {
  const Vector row_max = logits.rowwise().maxCoeff();
  const Vector sums = (logits.colwise() - row_max).array().exp().rowwise().sum();
  return row_max.array() + sums.array().log();
}

Matrix softmax(const MatrixRef& logits) {
  const Vector row_max = logits.rowwise().maxCoeff();
  Matrix p = (logits.colwise() - row_max).array().exp();
  const Vector sums = p.rowwise().sum();
  p = p.array().colwise() / sums.array();
  return p;
}

CrossEntropy cross_entropy(const MatrixRef& logits, const std::vector<int>& labels) {
  const auto n = logits.rows();
  const int k = static_cast<int>(logits.cols());
  require(static_cast<Eigen::Index>(labels.size()) == n,
          "cross_entropy: " + std::to_string(labels.size()) + " labels for " +
              std::to_string(n) + " rows");
  const double loss_cap = -std::log(kProbFloor);
  const Vector lse = log_sum_exp(logits);
  CrossEntropy out;
  out.per_sample.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    require(y >= 0 && y < k, "cross_entropy: label " + std::to_string(y) +
                                 " out of range [0," + std::to_string(k) + ")");
    out.per_sample[i] = std::min(lse[i] - logits(i, y), loss_cap);
  }
  out.mean = n > 0 ? out.per_sample.mean() : 0.0;
  return out;
}

Matrix cross_entropy_grad(const MatrixRef& logits, const std::vector<int>& labels,
                          const Vector& weights) {
  const auto n = logits.rows();
  require(weights.size() == n, "cross_entropy_grad: weight/row count mismatch");
  Matrix grad = softmax(logits);
  for (Eigen::Index i = 0; i < n; ++i) {
    grad(i, labels[static_cast<std::size_t>(i)]) -= 1.0;
    grad.row(i) *= weights[i];
  }
  return grad;
}

}  // namespace wudalab
