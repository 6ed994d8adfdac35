#pragma once

#include "wudalab/data.hpp"
#include "wudalab/rng.hpp"
#include "wudalab/types.hpp"

#include <functional>
#include <vector>

namespace wudalab {

// Row-stochastic K x K label-corruption kernel: q(i,j) = Pr(observed=j | clean=i).
struct TransitionMatrix {
  int num_classes = 0;
  Matrix q;

  // i-th diagonal entry strictly dominates the rest of row i and column i.
  bool diagonally_dominant() const;

  static TransitionMatrix from(Matrix q);
};

// Diagonal 1-rho, everything else rho/(K-1).
TransitionMatrix symmetry_matrix(int num_classes, double rho);

// Diagonal 1-rho, mass rho on the next class (mod K). rho must stay below 0.5
// or the flipped class would dominate its own row.
TransitionMatrix pair_matrix(int num_classes, double rho);

struct NoisyDataset {
  Dataset data;  // features + observed labels; safe to hand to training code
  oracle::SourceTruth truth;
};

// Resample every label independently from its transition row.
NoisyDataset corrupt(const Dataset& clean, const TransitionMatrix& q, Rng& rng);

// Maps a sample (features, clean label) to some *incorrect* label.
using IncorrectLabeler = std::function<int(const VectorRef& features, int label)>;

// Sample-level realization of the (1-rho) p + rho q mixture: each sample is
// relabeled by `incorrect_labeler` with probability rho. A labeler that
// returns the clean label is a contract violation and is rejected with the
// sample index.
NoisyDataset corrupt_by_mixture(const Dataset& clean, double rho,
                                const IncorrectLabeler& incorrect_labeler, Rng& rng);

// Row-normalized count matrix of clean -> observed transitions. Classes with
// no clean samples get a zero row and a false flag.
struct EmpiricalTransition {
  Matrix q;
  std::vector<bool> row_defined;
};

EmpiricalTransition empirical_transition(const NoisyDataset& noisy, int num_classes);

}  // namespace wudalab
