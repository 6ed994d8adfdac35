#pragma once

#include "wudalab/nn/network.hpp"

namespace wudalab {

// MomentumSGD:  v <- mu*v - lr*g,  p <- p + v
// Adagrad:      acc <- acc + g^2,  p <- p - lr*g / sqrt(acc + 1e-8)
class Optimizer {
 public:
  enum class Kind { kMomentumSgd, kAdagrad };

  // Inert placeholder (SGD with zero learning rate).
  Optimizer() : Optimizer(Kind::kMomentumSgd, 0.0, 0.0) {}

  static Optimizer momentum_sgd(double learning_rate, double momentum = 0.9);
  static Optimizer adagrad(double learning_rate);

  // Applies one update to every trainable block of `net`. The per-parameter
  // state is sized lazily on first use and stays aligned with the network.
  void step(Network& net, const Gradients& grads);

  Kind kind() const { return kind_; }
  double learning_rate() const { return lr_; }
  void set_learning_rate(double lr) { lr_ = lr; }

  static constexpr double kAdagradEpsilon = 1e-8;

 private:
  Optimizer(Kind kind, double lr, double momentum) : kind_(kind), lr_(lr), momentum_(momentum) {}

  Kind kind_;
  double lr_;
  double momentum_;
  std::vector<Vector> state_;
};

}  // namespace wudalab
