#include "wudalab/noise.hpp"

#include <cmath>

namespace wudalab {

bool TransitionMatrix::diagonally_dominant() const {
  for (int i = 0; i < num_classes; ++i) {
    for (int j = 0; j < num_classes; ++j) {
      if (i == j) continue;
      if (!(q(i, i) > q(i, j)) || !(q(i, i) > q(j, i))) return false;
    }
  }
  return true;
}

TransitionMatrix TransitionMatrix::from(Matrix q) {
  require(q.rows() == q.cols() && q.rows() >= 2, "TransitionMatrix: need a square K>=2 matrix");
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    double row_sum = 0.0;
    for (Eigen::Index j = 0; j < q.cols(); ++j) {
      require(q(i, j) >= 0.0 && q(i, j) <= 1.0,
              "TransitionMatrix: entry out of [0,1] at row " + std::to_string(i));
      row_sum += q(i, j);
    }
    require(std::abs(row_sum - 1.0) <= 1e-9,
            "TransitionMatrix: row " + std::to_string(i) + " sums to " + std::to_string(row_sum));
  }
  TransitionMatrix tm;
  tm.num_classes = static_cast<int>(q.rows());
  tm.q = std::move(q);
  return tm;
}

TransitionMatrix symmetry_matrix(int num_classes, double rho) {
  require(num_classes >= 2, "symmetry_matrix: need at least 2 classes");
  require(rho >= 0.0 && rho < 1.0, "symmetry_matrix: rho must lie in [0,1)");
  Matrix q = Matrix::Constant(num_classes, num_classes, rho / (num_classes - 1));
  q.diagonal().setConstant(1.0 - rho);
  return TransitionMatrix::from(std::move(q));
}

TransitionMatrix pair_matrix(int num_classes, double rho) {
  require(num_classes >= 2, "pair_matrix: need at least 2 classes");
  require(rho >= 0.0, "pair_matrix: rho must be non-negative");
  require(rho < 0.5, "pair_matrix: rho = " + std::to_string(rho) +
                         " rejected; pair flipping requires rho < 0.5 so the true class "
                         "keeps the largest row mass");
  Matrix q = Matrix::Zero(num_classes, num_classes);
  for (int i = 0; i < num_classes; ++i) {
    q(i, i) = 1.0 - rho;
    q(i, (i + 1) % num_classes) = rho;
  }
  return TransitionMatrix::from(std::move(q));
}

NoisyDataset corrupt(const Dataset& clean, const TransitionMatrix& q, Rng& rng) {
  require(clean.num_classes == q.num_classes,
          "corrupt: dataset has " + std::to_string(clean.num_classes) + " classes, kernel " +
              std::to_string(q.num_classes));
  NoisyDataset out;
  out.data = clean;
  out.truth.clean_labels = clean.labels;
  out.truth.corrupted.resize(clean.labels.size());
  for (std::size_t i = 0; i < clean.labels.size(); ++i) {
    const int y = clean.labels[i];
    require(y >= 0 && y < q.num_classes, "corrupt: label out of range at sample " +
                                             std::to_string(i));
    const int observed = rng.categorical(q.q.row(y).data(), q.num_classes);
    out.data.labels[i] = observed;
    out.truth.corrupted[i] = observed != y;
  }
  return out;
}

NoisyDataset corrupt_by_mixture(const Dataset& clean, double rho,
                                const IncorrectLabeler& incorrect_labeler, Rng& rng) {
  require(rho >= 0.0 && rho <= 1.0, "corrupt_by_mixture: rho must lie in [0,1]");
  NoisyDataset out;
  out.data = clean;
  out.truth.clean_labels = clean.labels;
  out.truth.corrupted.assign(clean.labels.size(), false);
  for (std::size_t i = 0; i < clean.labels.size(); ++i) {
    if (rng.uniform() >= rho) continue;
    const int y = clean.labels[i];
    const int wrong = incorrect_labeler(clean.features.row(static_cast<Eigen::Index>(i)).transpose(), y);
    if (wrong == y) {
      throw std::runtime_error("corrupt_by_mixture: labeler returned the clean label " +
                               std::to_string(y) + " for sample " + std::to_string(i));
    }
    require(wrong >= 0 && wrong < clean.num_classes,
            "corrupt_by_mixture: labeler output out of range at sample " + std::to_string(i));
    out.data.labels[i] = wrong;
    out.truth.corrupted[i] = true;
  }
  return out;
}

EmpiricalTransition empirical_transition(const NoisyDataset& noisy, int num_classes) {
  require(noisy.truth.clean_labels.size() == noisy.data.labels.size(),
          "empirical_transition: oracle clean labels missing or misaligned");
  Matrix counts = Matrix::Zero(num_classes, num_classes);
  for (std::size_t i = 0; i < noisy.data.labels.size(); ++i) {
    counts(noisy.truth.clean_labels[i], noisy.data.labels[i]) += 1.0;
  }
  EmpiricalTransition out;
  out.q = Matrix::Zero(num_classes, num_classes);
  out.row_defined.resize(static_cast<std::size_t>(num_classes));
  for (int i = 0; i < num_classes; ++i) {
    const double row_sum = counts.row(i).sum();
    out.row_defined[static_cast<std::size_t>(i)] = row_sum > 0.0;
    if (row_sum > 0.0) out.q.row(i) = counts.row(i) / row_sum;
  }
  return out;
}

}  // namespace wudalab
