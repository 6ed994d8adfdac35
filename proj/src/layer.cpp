#include "wudalab/nn/layer.hpp"

#include <cmath>

namespace wudalab {

DenseLayer::DenseLayer(const LayerSpec& spec, Rng& init_rng) : spec_(spec) {
  require(spec.in_dim > 0 && spec.out_dim > 0, "DenseLayer: dimensions must be positive");
  require(spec.dropout_rate >= 0.0 && spec.dropout_rate < 1.0,
          "DenseLayer: dropout rate must lie in [0,1)");
  const double bound = std::sqrt(6.0 / (spec.in_dim + spec.out_dim));
  w_.resize(spec.in_dim, spec.out_dim);
  for (Eigen::Index i = 0; i < w_.rows(); ++i)
    for (Eigen::Index j = 0; j < w_.cols(); ++j) w_(i, j) = init_rng.uniform(-bound, bound);
  b_ = Vector::Zero(spec.out_dim);
  if (spec.use_batchnorm) {
    gamma_ = Vector::Ones(spec.out_dim);
    beta_ = Vector::Zero(spec.out_dim);
    run_mean_ = Vector::Zero(spec.out_dim);
    run_var_ = Vector::Ones(spec.out_dim);
  }
}

Matrix DenseLayer::forward(const MatrixRef& x, Mode mode, Rng* rng, Cache* cache) {
  require(x.cols() == spec_.in_dim, "DenseLayer::forward: input shape " + shape_of(x) +
                                        " does not match in_dim " +
                                        std::to_string(spec_.in_dim));
  if (cache) cache->input = x;

  Matrix z = x * w_;
  z.rowwise() += b_.transpose();

  if (spec_.use_batchnorm) {
    if (mode == Mode::kTrain) {
      const Vector mean = z.colwise().mean().transpose();
      const Matrix centered = z.rowwise() - mean.transpose();
      const Vector var = centered.array().square().colwise().mean().transpose();
      const Vector inv_std = (var.array() + kBnEpsilon).rsqrt();
      Matrix xhat = centered * inv_std.asDiagonal();
      run_mean_ = kBnDecay * run_mean_ + (1.0 - kBnDecay) * mean;
      run_var_ = kBnDecay * run_var_ + (1.0 - kBnDecay) * var;
      z = xhat * gamma_.asDiagonal();
      z.rowwise() += beta_.transpose();
      if (cache) {
        cache->bn_xhat = std::move(xhat);
        cache->bn_inv_std = inv_std;
      }
    } else {
      const Vector scale =
          gamma_.array() * (run_var_.array() + kBnEpsilon).rsqrt();
      const Vector shift = beta_ - run_mean_.cwiseProduct(scale);
      z = z * scale.asDiagonal();
      z.rowwise() += shift.transpose();
    }
  }

  if (cache) cache->pre_activation = z;
  if (spec_.activation == Activation::kReLU) z = z.cwiseMax(0.0);

  if (spec_.dropout_rate > 0.0 && mode == Mode::kTrain) {
    require(rng != nullptr, "DenseLayer::forward: dropout needs a random source in Train mode");
    const double keep = 1.0 - spec_.dropout_rate;
    Matrix mask(z.rows(), z.cols());
    for (Eigen::Index i = 0; i < mask.rows(); ++i)
      for (Eigen::Index j = 0; j < mask.cols(); ++j)
        mask(i, j) = rng->uniform() < keep ? 1.0 / keep : 0.0;
    z = z.cwiseProduct(mask);
    if (cache) cache->dropout_mask = std::move(mask);
  }
  return z;
}

Matrix DenseLayer::forward_eval(const MatrixRef& x) const {
  require(x.cols() == spec_.in_dim, "DenseLayer::forward_eval: input shape " + shape_of(x) +
                                        " does not match in_dim " +
                                        std::to_string(spec_.in_dim));
  Matrix z = x * w_;
  z.rowwise() += b_.transpose();
  if (spec_.use_batchnorm) {
    const Vector scale = gamma_.array() * (run_var_.array() + kBnEpsilon).rsqrt();
    const Vector shift = beta_ - run_mean_.cwiseProduct(scale);
    z = z * scale.asDiagonal();
    z.rowwise() += shift.transpose();
  }
  if (spec_.activation == Activation::kReLU) z = z.cwiseMax(0.0);
  return z;
}

Matrix DenseLayer::backward(const Cache& cache, const MatrixRef& grad_out, Grads* grads) const {
  Matrix g = grad_out;

  if (cache.dropout_mask.size() > 0) g = g.cwiseProduct(cache.dropout_mask);

  if (spec_.activation == Activation::kReLU) {
    g = (cache.pre_activation.array() > 0.0).select(g, 0.0);
  }

  if (spec_.use_batchnorm) {
    const auto n = static_cast<double>(g.rows());
    grads->beta = g.colwise().sum().transpose();
    grads->gamma = g.cwiseProduct(cache.bn_xhat).colwise().sum().transpose();
    Matrix dxhat = g * gamma_.asDiagonal();
    const Vector sum_dxhat = dxhat.colwise().sum().transpose();
    const Vector sum_dxhat_xhat = dxhat.cwiseProduct(cache.bn_xhat).colwise().sum().transpose();
    // Batch-statistics chain rule: each sample's gradient carries corrections
    // for the shared mean and variance.
    Matrix dz = n * dxhat;
    dz.rowwise() -= sum_dxhat.transpose();
    dz -= cache.bn_xhat * sum_dxhat_xhat.asDiagonal();
    g = (dz * cache.bn_inv_std.asDiagonal()) / n;
  }

  grads->w = cache.input.transpose() * g;
  grads->b = g.colwise().sum().transpose();
  return g * w_.transpose();
}

}  // namespace wudalab
