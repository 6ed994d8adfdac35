#include "wudalab/nn/network.hpp"

namespace wudalab {

Network::Network(const std::vector<LayerSpec>& specs, Rng& init_rng) {
  require(!specs.empty(), "Network: at least one layer required");
  for (std::size_t i = 1; i < specs.size(); ++i) {
    require(specs[i].in_dim == specs[i - 1].out_dim,
            "Network: layer " + std::to_string(i) + " in_dim " +
                std::to_string(specs[i].in_dim) + " does not match previous out_dim " +
                std::to_string(specs[i - 1].out_dim));
  }
  layers_.reserve(specs.size());
  for (const auto& s : specs) layers_.emplace_back(s, init_rng);
}

ForwardResult Network::forward(const MatrixRef& batch, Mode mode, Rng* rng) {
  ForwardResult res;
  res.tape.caches.resize(layers_.size());
  Matrix x = batch;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    x = layers_[i].forward(x, mode, rng, &res.tape.caches[i]);
  }
  check_finite(x, "network forward output");
  res.tape.version = version_;
  res.output = std::move(x);
  return res;
}

Matrix Network::evaluate(const MatrixRef& batch) const {
  Matrix x = batch;
  for (const auto& layer : layers_) x = layer.forward_eval(x);
  return x;
}

Network::BackwardResult Network::backward(const Tape& tape, const MatrixRef& grad_out) const {
  if (tape.version != version_) {
    throw std::runtime_error("Network::backward: stale tape (parameters changed since forward)");
  }
  require(tape.caches.size() == layers_.size(), "Network::backward: tape/layer count mismatch");
  BackwardResult res;
  res.grads.layers.resize(layers_.size());
  Matrix g = grad_out;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    g = layers_[i].backward(tape.caches[i], g, &res.grads.layers[i]);
  }
  res.input_grad = std::move(g);
  return res;
}

namespace {

template <typename Fn>
void for_each_block(const std::vector<DenseLayer>& layers, Fn&& fn) {
  for (const auto& l : layers) {
    fn(l.weights().data(), l.weights().size());
    fn(l.bias().data(), l.bias().size());
    if (l.spec().use_batchnorm) {
      fn(l.bn_scale().data(), l.bn_scale().size());
      fn(l.bn_shift().data(), l.bn_shift().size());
    }
  }
}

}  // namespace

Vector Network::flat_params() const {
  Eigen::Index total = 0;
  for_each_block(layers_, [&](const double*, Eigen::Index n) { total += n; });
  Vector flat(total);
  Eigen::Index pos = 0;
  for_each_block(layers_, [&](const double* p, Eigen::Index n) {
    flat.segment(pos, n) = Eigen::Map<const Vector>(p, n);
    pos += n;
  });
  return flat;
}

void Network::set_flat_params(const VectorRef& flat) {
  Eigen::Index pos = 0;
  for (auto& l : layers_) {
    auto take = [&](double* dst, Eigen::Index n) {
      require(pos + n <= flat.size(), "Network::set_flat_params: vector too short");
      Eigen::Map<Vector>(dst, n) = flat.segment(pos, n);
      pos += n;
    };
    take(l.weights().data(), l.weights().size());
    take(l.bias().data(), l.bias().size());
    if (l.spec().use_batchnorm) {
      take(l.bn_scale().data(), l.bn_scale().size());
      take(l.bn_shift().data(), l.bn_shift().size());
    }
  }
  require(pos == flat.size(), "Network::set_flat_params: vector too long");
  bump_version();
}

Vector Network::flatten(const Gradients& grads) const {
  require(grads.layers.size() == layers_.size(), "Network::flatten: gradient/layer mismatch");
  Vector flat(flat_params().size());
  Eigen::Index pos = 0;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& g = grads.layers[i];
    auto put = [&](const double* src, Eigen::Index n) {
      flat.segment(pos, n) = Eigen::Map<const Vector>(src, n);
      pos += n;
    };
    put(g.w.data(), g.w.size());
    put(g.b.data(), g.b.size());
    if (layers_[i].spec().use_batchnorm) {
      put(g.gamma.data(), g.gamma.size());
      put(g.beta.data(), g.beta.size());
    }
  }
  return flat;
}

Gradients Network::zero_grads() const {
  Gradients g;
  g.layers.resize(layers_.size());
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& spec = layers_[i].spec();
    g.layers[i].w = Matrix::Zero(spec.in_dim, spec.out_dim);
    g.layers[i].b = Vector::Zero(spec.out_dim);
    if (spec.use_batchnorm) {
      g.layers[i].gamma = Vector::Zero(spec.out_dim);
      g.layers[i].beta = Vector::Zero(spec.out_dim);
    }
  }
  return g;
}

void accumulate(Gradients& into, const Gradients& extra) {
  require(into.layers.size() == extra.layers.size(), "accumulate: layer count mismatch");
  for (std::size_t i = 0; i < into.layers.size(); ++i) {
    into.layers[i].w += extra.layers[i].w;
    into.layers[i].b += extra.layers[i].b;
    if (extra.layers[i].gamma.size() > 0) {
      into.layers[i].gamma += extra.layers[i].gamma;
      into.layers[i].beta += extra.layers[i].beta;
    }
  }
}

}  // namespace wudalab
