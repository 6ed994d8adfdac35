#include "wudalab/nn/checkpoint.hpp"

#include "wudalab/rng.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace wudalab {

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 4);
}

void put_f64(std::ostream& os, double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  os.write(b, 8);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

void put_vector(std::ostream& os, const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) put_f64(os, v[i]);
}

Vector get_vector(std::istream& is, Eigen::Index n) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = get_f64(is);
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, const Network*>>& nets) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
  os.write(kCheckpointMagic, sizeof(kCheckpointMagic) - 1);
  put_u32(os, static_cast<std::uint32_t>(nets.size()));
  for (const auto& [name, net] : nets) {
    put_u32(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32(os, static_cast<std::uint32_t>(net->layers().size()));
    for (const auto& layer : net->layers()) {
      const auto& s = layer.spec();
      put_u32(os, static_cast<std::uint32_t>(s.in_dim));
      put_u32(os, static_cast<std::uint32_t>(s.out_dim));
      os.put(s.activation == Activation::kReLU ? 0 : 1);
      os.put(s.use_batchnorm ? 1 : 0);
      put_f64(os, s.dropout_rate);
      // Row-major weights, so bytes on disk follow the documented layout even
      // though Eigen owns the storage.
      for (Eigen::Index i = 0; i < layer.weights().rows(); ++i)
        for (Eigen::Index j = 0; j < layer.weights().cols(); ++j)
          put_f64(os, layer.weights()(i, j));
      put_vector(os, layer.bias());
      if (s.use_batchnorm) {
        put_vector(os, layer.bn_scale());
        put_vector(os, layer.bn_shift());
        put_vector(os, layer.bn_running_mean());
        put_vector(os, layer.bn_running_var());
      }
    }
  }
  if (!os) throw std::runtime_error("checkpoint: write failed for " + path);
}

std::vector<std::pair<std::string, Network>> load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
  char magic[sizeof(kCheckpointMagic) - 1];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw std::runtime_error("checkpoint: bad magic in " + path);
  }
  const std::uint32_t net_count = get_u32(is);
  std::vector<std::pair<std::string, Network>> out;
  out.reserve(net_count);
  for (std::uint32_t ni = 0; ni < net_count; ++ni) {
    const std::uint32_t name_len = get_u32(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    const std::uint32_t layer_count = get_u32(is);
    std::vector<LayerSpec> specs(layer_count);
    struct LayerData {
      Matrix w;
      Vector b, gamma, beta, run_mean, run_var;
    };
    std::vector<LayerData> data(layer_count);
    for (std::uint32_t li = 0; li < layer_count; ++li) {
      auto& s = specs[li];
      s.in_dim = static_cast<int>(get_u32(is));
      s.out_dim = static_cast<int>(get_u32(is));
      s.activation = is.get() == 0 ? Activation::kReLU : Activation::kIdentity;
      s.use_batchnorm = is.get() != 0;
      s.dropout_rate = get_f64(is);
      auto& d = data[li];
      d.w.resize(s.in_dim, s.out_dim);
      for (Eigen::Index i = 0; i < d.w.rows(); ++i)
        for (Eigen::Index j = 0; j < d.w.cols(); ++j) d.w(i, j) = get_f64(is);
      d.b = get_vector(is, s.out_dim);
      if (s.use_batchnorm) {
        d.gamma = get_vector(is, s.out_dim);
        d.beta = get_vector(is, s.out_dim);
        d.run_mean = get_vector(is, s.out_dim);
        d.run_var = get_vector(is, s.out_dim);
      }
    }
    Rng scratch(0);
    Network net(specs, scratch);
    for (std::uint32_t li = 0; li < layer_count; ++li) {
      auto& layer = net.layers()[li];
      layer.weights() = std::move(data[li].w);
      layer.bias() = std::move(data[li].b);
      if (specs[li].use_batchnorm) {
        layer.bn_scale() = std::move(data[li].gamma);
        layer.bn_shift() = std::move(data[li].beta);
        layer.bn_running_mean() = std::move(data[li].run_mean);
        layer.bn_running_var() = std::move(data[li].run_var);
      }
    }
    net.bump_version();
    out.emplace_back(std::move(name), std::move(net));
  }
  return out;
}

}  // namespace wudalab
