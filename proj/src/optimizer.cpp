#include "wudalab/nn/optimizer.hpp"

namespace wudalab {

Optimizer Optimizer::momentum_sgd(double learning_rate, double momentum) {
  require(learning_rate >= 0.0, "Optimizer: learning rate must be non-negative");
  require(momentum >= 0.0 && momentum < 1.0, "Optimizer: momentum must lie in [0,1)");
  return Optimizer(Kind::kMomentumSgd, learning_rate, momentum);
}

Optimizer Optimizer::adagrad(double learning_rate) {
  require(learning_rate >= 0.0, "Optimizer: learning rate must be non-negative");
  return Optimizer(Kind::kAdagrad, learning_rate, 0.0);
}

void Optimizer::step(Network& net, const Gradients& grads) {
  require(grads.layers.size() == net.layers().size(), "Optimizer::step: gradient/layer mismatch");

  std::size_t block = 0;
  auto update = [&](Eigen::Map<Vector> p, Eigen::Map<const Vector> g) {
    if (state_.size() <= block) state_.resize(block + 1);
    Vector& s = state_[block];
    if (s.size() != p.size()) s = Vector::Zero(p.size());
    if (kind_ == Kind::kMomentumSgd) {
      s = momentum_ * s - lr_ * g;
      p += s;
    } else {
      s.array() += g.array().square();
      p.array() -= lr_ * g.array() / (s.array() + kAdagradEpsilon).sqrt();
    }
    if (!p.allFinite()) {
      throw std::runtime_error("Optimizer::step: parameters became non-finite");
    }
    ++block;
  };

  for (std::size_t i = 0; i < net.layers().size(); ++i) {
    auto& l = net.layers()[i];
    const auto& g = grads.layers[i];
    update(Eigen::Map<Vector>(l.weights().data(), l.weights().size()),
           Eigen::Map<const Vector>(g.w.data(), g.w.size()));
    update(Eigen::Map<Vector>(l.bias().data(), l.bias().size()),
           Eigen::Map<const Vector>(g.b.data(), g.b.size()));
    if (l.spec().use_batchnorm) {
      update(Eigen::Map<Vector>(l.bn_scale().data(), l.bn_scale().size()),
             Eigen::Map<const Vector>(g.gamma.data(), g.gamma.size()));
      update(Eigen::Map<Vector>(l.bn_shift().data(), l.bn_shift().size()),
             Eigen::Map<const Vector>(g.beta.data(), g.beta.size()));
    }
  }
  net.bump_version();
}

}  // namespace wudalab
