#include "wudalab/data.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace wudalab {

DomainPair make_blob_pair(int num_classes, int dim, int n_source, int n_target,
                          double rotation, const Vector& translation, std::uint64_t seed) {
  require(num_classes >= 2, "make_blob_pair: need at least 2 classes");
  require(dim >= 2, "make_blob_pair: need at least 2 feature dimensions");
  require(n_source > 0 && n_target > 0, "make_blob_pair: sample counts must be positive");
  require(translation.size() <= dim, "make_blob_pair: translation longer than feature dim");

  Matrix centers = Matrix::Zero(num_classes, dim);
  for (int k = 0; k < num_classes; ++k) {
    const double angle = 2.0 * std::numbers::pi * k / num_classes;
    centers(k, 0) = 4.0 * std::cos(angle);
    centers(k, 1) = 4.0 * std::sin(angle);
  }

  Vector shift = Vector::Zero(dim);
  shift.head(translation.size()) = translation;

  const double c = std::cos(rotation);
  const double s = std::sin(rotation);

  Rng rng_s(derive_seed(seed, "blobs-source"));
  Rng rng_t(derive_seed(seed, "blobs-target"));

  auto draw = [&](Rng& rng, int n, bool shifted, Matrix& feats, std::vector<int>& labels) {
    feats.resize(n, dim);
    labels.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const int k = i % num_classes;  // balanced classes
      labels[static_cast<std::size_t>(i)] = k;
      for (int j = 0; j < dim; ++j) feats(i, j) = centers(k, j) + rng.normal();
      if (shifted) {
        const double x = feats(i, 0), y = feats(i, 1);
        feats(i, 0) = c * x - s * y;
        feats(i, 1) = s * x + c * y;
        feats.row(i) += shift.transpose();
      }
    }
  };

  DomainPair pair;
  pair.num_classes = num_classes;
  pair.dim = dim;
  pair.shift.rotation = rotation;
  pair.shift.translation = shift;
  pair.source.num_classes = num_classes;
  draw(rng_s, n_source, false, pair.source.features, pair.source.labels);
  draw(rng_t, n_target, true, pair.target_features, pair.target_truth.labels);
  return pair;
}

namespace {

std::uint32_t read_be_u32(std::istream& is, const std::string& path) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw std::runtime_error("IDX: truncated header in " + path);
  return (static_cast<std::uint32_t>(b[0]) << 24) | (static_cast<std::uint32_t>(b[1]) << 16) |
         (static_cast<std::uint32_t>(b[2]) << 8) | static_cast<std::uint32_t>(b[3]);
}

std::vector<std::uint8_t> read_idx_payload(const std::string& path, int expected_rank,
                                           std::vector<std::uint32_t>& dims) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("IDX: cannot open " + path);
  const std::uint32_t magic = read_be_u32(is, path);
  if ((magic >> 8) != 0x8) {
    throw std::runtime_error("not IDX: bad magic in " + path);
  }
  const int rank = static_cast<int>(magic & 0xff);
  if (rank != expected_rank) {
    throw std::runtime_error("IDX: " + path + " has rank " + std::to_string(rank) +
                             ", expected " + std::to_string(expected_rank));
  }
  dims.resize(static_cast<std::size_t>(rank));
  std::size_t total = 1;
  for (auto& d : dims) {
    d = read_be_u32(is, path);
    total *= d;
  }
  std::vector<std::uint8_t> payload(total);
  is.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(total));
  if (!is) throw std::runtime_error("IDX: truncated payload in " + path);
  return payload;
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
  std::vector<std::uint32_t> img_dims, lbl_dims;
  const auto pixels = read_idx_payload(images_path, 3, img_dims);
  const auto labels = read_idx_payload(labels_path, 1, lbl_dims);
  if (img_dims[0] != lbl_dims[0]) {
    throw std::runtime_error("IDX: " + std::to_string(img_dims[0]) + " images but " +
                             std::to_string(lbl_dims[0]) + " labels");
  }
  const auto n = static_cast<Eigen::Index>(img_dims[0]);
  const auto rows = static_cast<int>(img_dims[1]);
  const auto cols = static_cast<int>(img_dims[2]);
  const Eigen::Index d = static_cast<Eigen::Index>(rows) * cols;

  Dataset out;
  out.image_rows = rows;
  out.image_cols = cols;
  out.features.resize(n, d);
  out.labels.resize(static_cast<std::size_t>(n));
  int max_label = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      out.features(i, j) =
          static_cast<double>(pixels[static_cast<std::size_t>(i * d + j)]) / 255.0;
    }
    const int y = labels[static_cast<std::size_t>(i)];
    out.labels[static_cast<std::size_t>(i)] = y;
    max_label = std::max(max_label, y);
  }
  out.num_classes = max_label + 1;
  return out;
}

void write_idx_u8(const std::string& path, const std::vector<int>& dims,
                  const std::vector<std::uint8_t>& payload) {
  std::size_t total = 1;
  for (const int d : dims) {
    require(d >= 0, "write_idx_u8: negative dimension");
    total *= static_cast<std::size_t>(d);
  }
  require(total == payload.size(), "write_idx_u8: payload does not match dims");
  require(dims.size() <= 0xff, "write_idx_u8: too many dims");
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("IDX: cannot open " + path + " for writing");
  const char magic[4] = {0, 0, 0x08, static_cast<char>(dims.size())};
  os.write(magic, 4);
  for (const int d : dims) {
    const auto v = static_cast<std::uint32_t>(d);
    const char b[4] = {static_cast<char>(v >> 24), static_cast<char>((v >> 16) & 0xff),
                       static_cast<char>((v >> 8) & 0xff), static_cast<char>(v & 0xff)};
    os.write(b, 4);
  }
  os.write(reinterpret_cast<const char*>(payload.data()),
           static_cast<std::streamsize>(payload.size()));
  if (!os) throw std::runtime_error("IDX: write failed for " + path);
}

Dataset load_feature_csv(const std::string& path, int label_column, bool has_header) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("CSV: cannot open " + path);

  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  std::size_t width = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (has_header && line_no == 1) continue;
    if (line.empty()) continue;
    std::vector<double> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
        if (used != cell.size()) throw std::invalid_argument(cell);
        cells.push_back(v);
      } catch (const std::exception&) {
        throw std::runtime_error("CSV: non-numeric cell '" + cell + "' at line " +
                                 std::to_string(line_no) + " of " + path);
      }
    }
    if (width == 0) {
      width = cells.size();
    } else if (cells.size() != width) {
      throw std::runtime_error("CSV: ragged row at line " + std::to_string(line_no) + " of " +
                               path + " (got " + std::to_string(cells.size()) + " cells, expected " +
                               std::to_string(width) + ")");
    }
    rows.push_back(std::move(cells));
  }
  if (rows.empty()) throw std::runtime_error("CSV: no data rows in " + path);
  require(label_column >= 0 && static_cast<std::size_t>(label_column) < width,
          "CSV: label column out of range");

  Dataset out;
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto d = static_cast<Eigen::Index>(width) - 1;
  out.features.resize(n, d);
  out.labels.resize(rows.size());
  int max_label = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index j_out = 0;
    for (std::size_t j = 0; j < width; ++j) {
      if (static_cast<int>(j) == label_column) {
        const double v = rows[static_cast<std::size_t>(i)][j];
        const int y = static_cast<int>(std::lround(v));
        if (std::abs(v - y) > 1e-9 || y < 0) {
          throw std::runtime_error("CSV: label '" + std::to_string(v) + "' at data row " +
                                   std::to_string(i + 1) + " is not a non-negative integer");
        }
        out.labels[static_cast<std::size_t>(i)] = y;
        max_label = std::max(max_label, y);
      } else {
        out.features(i, j_out++) = rows[static_cast<std::size_t>(i)][j];
      }
    }
  }
  out.num_classes = max_label + 1;
  return out;
}

Matrix rotate_image_features(const MatrixRef& features, int image_rows, int image_cols,
                             double radians) {
  require(features.cols() == static_cast<Eigen::Index>(image_rows) * image_cols,
          "rotate_image_features: feature width does not match image shape");
  const double c = std::cos(radians);
  const double s = std::sin(radians);
  const double cy = (image_rows - 1) / 2.0;
  const double cx = (image_cols - 1) / 2.0;
  Matrix out = Matrix::Zero(features.rows(), features.cols());
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    for (int r = 0; r < image_rows; ++r) {
      for (int col = 0; col < image_cols; ++col) {
        // Inverse mapping: rotate the output pixel back into the source frame.
        const double dy = r - cy;
        const double dx = col - cx;
        const int src_r = static_cast<int>(std::lround(c * dy + s * dx + cy));
        const int src_c = static_cast<int>(std::lround(-s * dy + c * dx + cx));
        if (src_r >= 0 && src_r < image_rows && src_c >= 0 && src_c < image_cols) {
          out(i, r * image_cols + col) = features(i, src_r * image_cols + src_c);
        }
      }
    }
  }
  return out;
}

BatchIterator::BatchIterator(const Dataset& dataset, int batch_size, std::uint64_t seed)
    : dataset_(&dataset), batch_size_(batch_size), seed_(seed) {
  require(batch_size > 0, "BatchIterator: batch size must be positive");
  require(dataset.size() > 0, "BatchIterator: empty dataset");
  reshuffle();
}

void BatchIterator::reshuffle() {
  Rng rng(derive_seed(seed_, "shuffle", static_cast<std::uint64_t>(epoch_)));
  order_ = rng.permutation(static_cast<int>(dataset_->size()));
  pos_ = 0;
}

BatchIterator::Batch BatchIterator::next() {
  if (pos_ >= dataset_->size()) {
    ++epoch_;
    reshuffle();
  }
  const auto take = std::min<Eigen::Index>(batch_size_, dataset_->size() - pos_);
  Batch batch;
  batch.indices.assign(order_.begin() + pos_, order_.begin() + pos_ + take);
  batch.features.resize(take, dataset_->features.cols());
  batch.labels.resize(static_cast<std::size_t>(take));
  for (Eigen::Index i = 0; i < take; ++i) {
    const int idx = batch.indices[static_cast<std::size_t>(i)];
    batch.features.row(i) = dataset_->features.row(idx);
    batch.labels[static_cast<std::size_t>(i)] = dataset_->labels[static_cast<std::size_t>(idx)];
  }
  pos_ += take;
  return batch;
}

}  // namespace wudalab
