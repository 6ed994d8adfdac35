#pragma once

#include "wudalab/rng.hpp"
#include "wudalab/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace wudalab {

// Training-visible view of a labeled dataset. Ground-truth oracle fields
// live in the `oracle` namespace below and are handed only to metrics code.
struct Dataset {
  Matrix features;          // n x d, one sample per row
  std::vector<int> labels;  // size n, values in [0, num_classes)
  int num_classes = 0;
  int image_rows = 0;  // nonzero only for image data (features = flattened pixels)
  int image_cols = 0;

  Eigen::Index size() const { return features.rows(); }
  int dim() const { return static_cast<int>(features.cols()); }
};

namespace oracle {

// Ground truth behind the corruption process. Training code never sees this.
struct SourceTruth {
  std::vector<int> clean_labels;
  std::vector<bool> corrupted;  // true where observed label != clean label
};

// Held-out target labels, used only to score predictions.
struct TargetTruth {
  std::vector<int> labels;
};

}  // namespace oracle

struct ShiftDescriptor {
  double rotation = 0.0;  // radians, applied in the first two feature coordinates
  Vector translation;     // empty means zero
};

struct DomainPair {
  Dataset source;  // clean labels; corrupt them via the noise module
  Matrix target_features;
  oracle::TargetTruth target_truth;
  int num_classes = 0;
  int dim = 0;
  ShiftDescriptor shift;
};

// K unit-covariance Gaussian clusters with centers on a radius-4 circle in
// the first two coordinates; the target domain draws from the same clusters
// pushed through rotation + translation. Labels are cluster ids.
DomainPair make_blob_pair(int num_classes, int dim, int n_source, int n_target,
                          double rotation, const Vector& translation, std::uint64_t seed);

// IDX ingestion: big-endian dimension header, u8 payload. Pixels are scaled
// to [0,1]; labels must be a rank-1 u8 tensor of matching length.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

// Writes a rank-N u8 IDX tensor (used for round-trip checks and fixtures).
void write_idx_u8(const std::string& path, const std::vector<int>& dims,
                  const std::vector<std::uint8_t>& payload);

// Rectangular numeric table; one column carries integer labels. Errors name
// the offending 1-based line.
Dataset load_feature_csv(const std::string& path, int label_column, bool has_header);

// Nearest-neighbor rotation about the image center for every flattened row.
Matrix rotate_image_features(const MatrixRef& features, int image_rows, int image_cols,
                             double radians);

// Epoch-partitioning mini-batch source. The shuffle order is a pure function
// of (seed, epoch); one epoch visits every index exactly once and the final
// short batch is emitted.
class BatchIterator {
 public:
  struct Batch {
    std::vector<int> indices;
    Matrix features;
    std::vector<int> labels;
  };

  BatchIterator(const Dataset& dataset, int batch_size, std::uint64_t seed);

  Batch next();
  int epoch() const { return epoch_; }

 private:
  void reshuffle();

  const Dataset* dataset_;
  int batch_size_;
  std::uint64_t seed_;
  int epoch_ = 0;
  Eigen::Index pos_ = 0;
  std::vector<int> order_;
};

}  // namespace wudalab
