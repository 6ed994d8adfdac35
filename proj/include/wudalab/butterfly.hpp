#pragma once

#include "wudalab/data.hpp"
#include "wudalab/nn/loss.hpp"
#include "wudalab/nn/network.hpp"
#include "wudalab/nn/optimizer.hpp"
#include "wudalab/rng.hpp"

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace wudalab {

// Binary per-batch selection vector; at least one sample is always kept.
struct SelectionMask {
  std::vector<char> u;
  int k = 0;  // number of selected samples

  int size() const { return static_cast<int>(u.size()); }
};

// Mean loss over the selected samples: (sum_i u_i l_i) / (sum_i u_i).
double selection_loss(const Vector& per_sample_losses, const SelectionMask& mask);

// Keep the k = max(1, ceil(alpha*n)) samples with the smallest losses; ties
// break toward the lower index. When `eligible` is given, ineligible samples
// are always kept and only eligible ones compete for exclusion.
SelectionMask small_loss_select(const Vector& per_sample_losses, double alpha,
                                const std::vector<char>* eligible = nullptr);

enum class Branch { kMixture, kTarget };

struct ScheduleParams {
  double tau = 0.4;      // assumed noise rate in the mixture domain
  double tau_t = 0.05;   // assumed noise rate among pseudo labels
  int warmup_epochs = 5;   // T_k
  int total_epochs = 30;   // T_max
};

// Piecewise-linear remember rate: 1 - min(T/T_k * tau, tau) for the mixture
// branch, same with tau_t for the target branch.
double remember_rate(int epoch, const ScheduleParams& params, Branch branch);

// min(floor(T/20 * n_t), n_t_max).
long pseudo_quota(int epoch, long n_target, long n_t_max);

struct PseudoLabelPolicy {
  double confidence_threshold = 0.95;  // must exceed 0.5
  long n_init = 0;                     // pseudo-label quota used at the first harvest
  long n_t_max = 15000;
};

enum class RegularizerNorm { kAbsSum, kFrobenius };

struct ButterflyVariant {
  bool check_source_in_mixture = true;
  bool check_target_in_mixture = true;
  bool check_branch2 = true;
  bool use_regularizer = true;

  // Named presets: bnet, b-wo-c, bnet-s, bnet-t, bnet-st, bnet-m, no-check.
  static ButterflyVariant preset(std::string_view name);
  static const std::vector<std::string>& preset_names();
};

struct OptimizerConfig {
  Optimizer::Kind kind = Optimizer::Kind::kMomentumSgd;
  double learning_rate = 0.01;
  double momentum = 0.9;

  Optimizer make() const;
};

struct ArchConfig {
  int input_dim = 0;
  int num_classes = 0;
  int hidden = 32;
  int extractor_layers = 2;
  int head_layers = 2;
  double dropout = 0.5;
  bool batchnorm = true;
};

// Shared feature extractor plus four classifier heads. f1/f2 adapt on the
// mixture domain, ft1/ft2 specialize on pseudo-labeled target data. Each
// component gets its own init stream and optimizer.
struct ModelBundle {
  Network extractor;
  Network f1, f2, ft1, ft2;
  Optimizer opt_extractor, opt_f1, opt_f2, opt_ft1, opt_ft2;

  static ModelBundle create(const ArchConfig& arch, const OptimizerConfig& optim,
                            std::uint64_t seed);
};

// Averaged softmax of two heads behind the shared extractor (eval mode).
Matrix head_pair_softmax(const Network& extractor, const Network& a, const Network& b,
                         const MatrixRef& features);

struct BatchData {
  Matrix features;
  std::vector<int> labels;
};

struct CheckingOptions {
  double remember_rate = 1.0;
  const std::vector<char>* eligible = nullptr;  // nullptr: everything competes
  double penalty = 0.0;                          // weight of |W_a1^T W_b1|
  RegularizerNorm reg_norm = RegularizerNorm::kAbsSum;
  bool update_extractor = true;
};

struct CheckingStats {
  SelectionMask mask_a;  // selection from head a's losses
  SelectionMask mask_b;  // selection from head b's losses
  double cross_loss_a = 0.0;  // loss of head a over head b's selection
  double cross_loss_b = 0.0;
};

// One co-teaching update: each head selects its small-loss subset, then each
// head descends the loss over the *other* head's subset. Shared-extractor
// gradients from both heads are accumulated and applied once.
CheckingStats checking_step(Network& extractor, Network& head_a, Network& head_b,
                            Optimizer& opt_extractor, Optimizer& opt_a, Optimizer& opt_b,
                            const BatchData& batch, const CheckingOptions& options,
                            Rng* dropout_rng);

// Sample `quota` target points without replacement and keep those where the
// two heads agree and at least one is confident. Returns (index, label) pairs.
std::vector<std::pair<int, int>> assign_pseudo_labels(const Network& extractor,
                                                      const Network& f1, const Network& f2,
                                                      const MatrixRef& target_features,
                                                      long quota,
                                                      const PseudoLabelPolicy& policy, Rng& rng);

struct TrainConfig {
  ScheduleParams schedule;
  PseudoLabelPolicy policy;
  ButterflyVariant variant;
  double penalty = 0.01;
  RegularizerNorm reg_norm = RegularizerNorm::kAbsSum;
  int steps_per_epoch = 50;  // mini-batch iterations per epoch (N_max)
  int batch_size = 128;
  bool extractor_from_branch2 = true;  // propagate Branch-II gradients into the extractor
  std::string failure_checkpoint_path;  // where to park the last good bundle on NaN abort
};

// What one epoch of training touched, in training-visible terms only. Oracle
// judgments (was a selected sample actually clean?) belong to metrics code.
struct EpochTrace {
  int epoch = 0;
  double rate_mixture = 1.0;
  double rate_target = 1.0;
  std::vector<int> selected_source;  // source indices picked by Branch-I masks
  std::vector<std::pair<int, int>> selected_pseudo;  // (target idx, pseudo label) picked by Branch-II
  std::vector<std::pair<int, int>> harvest;          // pseudo set produced at epoch end
  double mean_selected_loss_b1 = 0.0;
  double mean_selected_loss_b2 = 0.0;
};

using EpochCallback = std::function<void(const EpochTrace&, const ModelBundle&)>;

// The quadruple training loop. Epoch 1 bootstraps the pseudo-labeled target
// set with the noisy source data; every epoch runs `steps_per_epoch` checking
// updates per branch, then re-labels target points and rebuilds the mixture.
// The trained target classifiers are ft1/ft2.
void train_butterfly(const Dataset& noisy_source, const MatrixRef& target_features,
                     ModelBundle& bundle, const TrainConfig& config, std::uint64_t run_seed,
                     const EpochCallback& on_epoch = nullptr);

struct TwoStepOutputs {
  std::vector<int> relabeled_source;  // labels assigned by the denoising stage
};

// Checking-then-train baseline: co-teach two heads on the noisy source alone,
// relabel every source sample with them, then run the adaptation loop with
// all checks off on the relabeled data. `bundle` receives the stage-2 model.
TwoStepOutputs train_two_step(const Dataset& noisy_source, const MatrixRef& target_features,
                              ModelBundle& bundle, const ArchConfig& arch,
                              const OptimizerConfig& optim, const TrainConfig& config,
                              std::uint64_t run_seed, const EpochCallback& on_epoch = nullptr);

// All five networks in one checkpoint file.
void save_bundle_checkpoint(const std::string& path, const ModelBundle& bundle);
void load_bundle_checkpoint(const std::string& path, ModelBundle& bundle);

}  // namespace wudalab
