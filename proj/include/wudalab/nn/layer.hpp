#pragma once

#include "wudalab/rng.hpp"
#include "wudalab/types.hpp"

namespace wudalab {

enum class Activation { kReLU, kIdentity };

struct LayerSpec {
  int in_dim = 0;
  int out_dim = 0;
  Activation activation = Activation::kReLU;
  double dropout_rate = 0.0;  // [0, 1); inverted dropout, scaled at train time
  bool use_batchnorm = false;
};

// One dense block: affine -> batchnorm -> activation -> dropout.
class DenseLayer {
 public:
  struct Cache {
    Matrix input;
    Matrix bn_xhat;
    Vector bn_inv_std;
    Matrix pre_activation;  // value fed into the activation
    Matrix dropout_mask;    // already carries the 1/(1-p) train-time scale
  };

  struct Grads {
    Matrix w;
    Vector b;
    Vector gamma;
    Vector beta;
  };

  DenseLayer(const LayerSpec& spec, Rng& init_rng);

  // Train mode updates batchnorm running statistics and draws dropout masks
  // from `rng`; Eval mode is deterministic and leaves the layer untouched.
  Matrix forward(const MatrixRef& x, Mode mode, Rng* rng, Cache* cache);
  Matrix forward_eval(const MatrixRef& x) const;

  // Returns the gradient w.r.t. the layer input.
  Matrix backward(const Cache& cache, const MatrixRef& grad_out, Grads* grads) const;

  const LayerSpec& spec() const { return spec_; }

  Matrix& weights() { return w_; }
  const Matrix& weights() const { return w_; }
  Vector& bias() { return b_; }
  const Vector& bias() const { return b_; }
  Vector& bn_scale() { return gamma_; }
  const Vector& bn_scale() const { return gamma_; }
  Vector& bn_shift() { return beta_; }
  const Vector& bn_shift() const { return beta_; }
  Vector& bn_running_mean() { return run_mean_; }
  const Vector& bn_running_mean() const { return run_mean_; }
  Vector& bn_running_var() { return run_var_; }
  const Vector& bn_running_var() const { return run_var_; }

  static constexpr double kBnEpsilon = 1e-5;
  static constexpr double kBnDecay = 0.9;

 private:
  LayerSpec spec_;
  Matrix w_;  // in_dim x out_dim
  Vector b_;
  Vector gamma_, beta_, run_mean_, run_var_;
};

}  // namespace wudalab
