#pragma once

#include "wudalab/butterfly.hpp"
#include "wudalab/metrics.hpp"

#include <optional>
#include <string>
#include <vector>

namespace wudalab {

struct DataConfig {
  std::string kind = "blobs";  // blobs | idx | csv

  // blobs
  int classes = 4;
  int dim = 10;
  int n_source = 4000;
  int n_target = 2000;
  double rotation = 0.5235987755982988;  // pi/6
  Vector translation;                    // empty = none
  std::optional<std::uint64_t> seed;     // default: derived per seed index

  // idx: when target files are absent the target domain is the source images
  // rotated by image_rotation_deg
  std::string images, labels;
  std::string target_images, target_labels;
  double image_rotation_deg = 35.0;
  int max_source = 0;  // 0 = use everything
  int max_target = 0;

  // csv
  std::string path, target_path;
  int label_column = 0;
  bool header = false;
};

struct NoiseConfig {
  std::string kind = "symmetry";  // symmetry | pair | mixture
  double rho = 0.2;
  std::optional<std::uint64_t> seed;
};

struct ModelConfig {
  int hidden = 32;
  int extractor_layers = 2;
  int head_layers = 2;
  double dropout = 0.5;
  bool batchnorm = true;
  bool freeze_extractor_branch2 = false;
};

struct MetricsOptions {
  HeadCombine combine = HeadCombine::kAverage;
  bool bound_diagnostic = true;
};

// Fully resolved experiment description: every key has a value before any
// run starts, and unknown keys in the file are rejected by name.
struct ExperimentSpec {
  std::uint64_t seed = 1;
  std::string out_dir = "out";

  DataConfig data;
  NoiseConfig noise;
  ModelConfig model;

  ScheduleParams schedule;
  std::optional<long> n_init;  // default: pseudo_quota(1, n_t, n_t_max)
  long n_t_max = 15000;
  double confidence = 0.95;
  double penalty = 0.01;
  RegularizerNorm reg_norm = RegularizerNorm::kAbsSum;
  int steps_per_epoch = 50;
  int batch_size = 128;
  std::string variant = "bnet";

  OptimizerConfig optim;
  MetricsOptions metrics;

  std::vector<std::string> variants;  // resolved at run time; defaults to {variant}
  int num_seeds = 1;
};

ExperimentSpec parse_spec_text(const std::string& text);
ExperimentSpec parse_spec_file(const std::string& path);

// Checks cross-field consistency (ranges, known kinds, variant names).
void validate_spec(const ExperimentSpec& spec);

}  // namespace wudalab
