#pragma once

#include "wudalab/config.hpp"
#include "wudalab/metrics.hpp"
#include "wudalab/noise.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace wudalab {

// Fully built two-domain task: corrupted source plus quarantined oracles.
struct BuiltTask {
  NoisyDataset noisy;
  Matrix target_features;
  oracle::TargetTruth target_truth;
  int dim = 0;
  int classes = 0;
};

// Dataset and corruption seeds derive from (base seed, seed index) only, so
// every variant at the same seed index trains on identical data.
BuiltTask build_task(const ExperimentSpec& spec, int seed_index);

// Training streams derive from hash(base_seed, variant, seed_index); adding a
// variant never shifts any other cell.
std::uint64_t cell_seed(const ExperimentSpec& spec, const std::string& variant, int seed_index);

// One (variant, seed) training run; returns its RunLog and optionally the
// trained bundle for checkpointing.
RunLog run_cell(const ExperimentSpec& spec, const std::string& variant, int seed_index,
                ModelBundle* trained = nullptr);

struct CellOutcome {
  std::string variant;
  int seed_index = 0;
  bool ok = false;
  std::string error;
  double final_accuracy = 0.0;
  double best_accuracy = 0.0;
  double mean_last5 = 0.0;
  std::optional<double> relabel_accuracy;
};

struct GridResult {
  std::vector<CellOutcome> cells;
  int failures = 0;
};

// Runs the full (variant x seed) grid, writing one RunLog CSV and checkpoint
// per cell plus summary.csv and grid_summary.csv. A failing cell is recorded
// in failures.csv and does not abort the others.
GridResult run_grid(const ExperimentSpec& spec, std::ostream& progress);

// Long-format series (variant,seed,epoch,value) assembled from the RunLog
// CSVs in `dir`. quantity: accuracy | rho01_s | rho01_t. Logs with more
// epochs than the shortest are truncated to the common prefix with a warning.
void emit_figure_series(const std::string& dir, const std::string& quantity, std::ostream& warn);

}  // namespace wudalab
