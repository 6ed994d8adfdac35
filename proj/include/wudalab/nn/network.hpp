#pragma once

#include "wudalab/nn/layer.hpp"

#include <cstdint>
#include <vector>

namespace wudalab {

struct ForwardResult;
struct Gradients {
  std::vector<DenseLayer::Grads> layers;
};

// A stack of dense blocks. Single-writer during training; a copied snapshot
// can be evaluated freely from anywhere.
class Network {
 public:
  struct Tape {
    std::vector<DenseLayer::Cache> caches;
    std::uint64_t version = 0;
  };

  Network() = default;
  Network(const std::vector<LayerSpec>& specs, Rng& init_rng);

  int input_dim() const { return layers_.empty() ? 0 : layers_.front().spec().in_dim; }
  int output_dim() const { return layers_.empty() ? 0 : layers_.back().spec().out_dim; }

  ForwardResult forward(const MatrixRef& batch, Mode mode, Rng* rng);
  Matrix evaluate(const MatrixRef& batch) const;

  struct BackwardResult {
    Gradients grads;
    Matrix input_grad;
  };
  // Rejects tapes recorded before the most recent parameter mutation.
  BackwardResult backward(const Tape& tape, const MatrixRef& grad_out) const;

  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  std::uint64_t version() const { return version_; }
  void bump_version() { ++version_; }

  // Flattened view of the trainable parameters (weights, biases, batchnorm
  // scale/shift), layer by layer. Running statistics are excluded.
  Vector flat_params() const;
  void set_flat_params(const VectorRef& flat);
  Vector flatten(const Gradients& grads) const;

  Gradients zero_grads() const;

 private:
  std::vector<DenseLayer> layers_;
  std::uint64_t version_ = 0;
};

struct ForwardResult {
  Matrix output;
  Network::Tape tape;
};

// Accumulate `extra` into `into`; shapes must agree (same architecture).
void accumulate(Gradients& into, const Gradients& extra);

}  // namespace wudalab
