#pragma once

#include "wudalab/types.hpp"

#include <vector>

namespace wudalab {

// Row-wise softmax with log-sum-exp stabilization; rows sum to 1 for logits
// with magnitude up to ~1e3.
Matrix softmax(const MatrixRef& logits);

// Per-sample log-sum-exp, one value per row.
Vector log_sum_exp(const MatrixRef& logits);

struct CrossEntropy {
  Vector per_sample;
  double mean = 0.0;
};

// per_sample[i] = -log softmax(logits.row(i))[labels[i]], with the softmax
// probability floored at 1e-12 before the log.
CrossEntropy cross_entropy(const MatrixRef& logits, const std::vector<int>& labels);

// Gradient of  sum_i weight[i] * ce(logits.row(i), labels[i])  w.r.t. logits.
// Selection losses pass weight[i] = u_i / sum(u); a plain mean uses 1/n.
Matrix cross_entropy_grad(const MatrixRef& logits, const std::vector<int>& labels,
                          const Vector& weights);

constexpr double kProbFloor = 1e-12;

}  // namespace wudalab
