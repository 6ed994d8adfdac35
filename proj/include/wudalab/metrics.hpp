#pragma once

#include "wudalab/butterfly.hpp"
#include "wudalab/data.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace wudalab {

enum class HeadCombine { kAverage, kHead1 };

// Fraction of target points whose prediction (argmax of the combined target
// heads) matches the oracle label.
double target_accuracy(const Network& extractor, const Network& ft1, const Network& ft2,
                       const MatrixRef& target_features, const std::vector<int>& oracle_labels,
                       HeadCombine combine = HeadCombine::kAverage);

// Fraction of selected samples whose oracle flag says "incorrect". Absent for
// an empty selection.
std::optional<double> rho01(const std::vector<int>& selected_indices,
                            const std::vector<bool>& oracle_correct);

// C = max_T rho(T) * sqrt(n*T); any finite series admits some finite C, so
// the trend flag (rho at the last epoch below rho at the first) carries the
// actual diagnostic value.
struct EnvelopeFit {
  double c = 0.0;
  long n = 0;
  bool decreasing = false;
  std::vector<std::pair<int, double>> series;
};

EnvelopeFit envelope_fit(const std::vector<std::pair<int, double>>& series, long n);

// The three selected-sample empirical risk terms, evaluated with f1 behind
// the shared extractor, and their 2a + 2b + c composite.
struct BoundDiagnostic {
  std::optional<double> source_observed;    // selected source, observed labels
  std::optional<double> source_pseudo_fn;   // selected source, pseudo-labeling-function labels
  std::optional<double> target_pseudo;      // selected pseudo-target, pseudo labels
  std::optional<double> composite;
};

BoundDiagnostic bound_diagnostic(const ModelBundle& bundle, const SelectionMask& source_mask,
                                 const SelectionMask& pseudo_mask, const Dataset& source,
                                 const std::vector<std::pair<int, int>>& pseudo_set,
                                 const MatrixRef& target_features);

// Convenience wrapper that derives both masks by small-loss selection at the
// given remember rates before delegating to bound_diagnostic.
BoundDiagnostic bound_diagnostic_at_rates(const ModelBundle& bundle, const Dataset& source,
                                          const std::vector<std::pair<int, int>>& pseudo_set,
                                          const MatrixRef& target_features, double rate_mixture,
                                          double rate_target);

struct EpochRecord {
  int epoch = 0;
  double target_acc = 0.0;
  std::optional<double> rho01_s;
  std::optional<double> rho01_t;
  long n_pseudo = 0;
  std::optional<double> pseudo_label_accuracy;
  std::optional<double> mean_selected_loss_branch1;
  std::optional<double> mean_selected_loss_branch2;
  std::optional<double> bound_composite;
};

struct RunLog {
  std::vector<EpochRecord> epochs;
  std::optional<double> relabel_accuracy;  // two-step stage-1 quality

  double final_accuracy() const;
  double best_accuracy() const;
  double mean_last(int count) const;
};

// One row per epoch, stable column order, '%.17g' floats so values round-trip
// exactly; absent values are empty cells. A trailing comment line carries the
// summary for table assembly.
std::string run_log_to_csv(const RunLog& log);
RunLog run_log_from_csv(const std::string& csv);

// Epoch observer that owns the oracle views and turns training traces into a
// RunLog. Bind it by reference into an EpochCallback.
class RunLogCollector {
 public:
  RunLogCollector(const oracle::SourceTruth& source_truth, const Dataset& noisy_source,
                  const MatrixRef& target_features, const oracle::TargetTruth& target_truth,
                  HeadCombine combine = HeadCombine::kAverage, bool compute_bound = true);

  void on_epoch(const EpochTrace& trace, const ModelBundle& bundle);

  EpochCallback callback() {
    return [this](const EpochTrace& t, const ModelBundle& b) { on_epoch(t, b); };
  }

  const RunLog& log() const { return log_; }
  RunLog& log() { return log_; }

 private:
  const oracle::SourceTruth* source_truth_;
  const Dataset* noisy_source_;
  Matrix target_features_;
  const oracle::TargetTruth* target_truth_;
  HeadCombine combine_;
  bool compute_bound_;
  RunLog log_;
};

}  // namespace wudalab
