#include "wudalab/butterfly.hpp"

#include "wudalab/nn/checkpoint.hpp"

#include <algorithm>
#include <cmath>

namespace wudalab {

double selection_loss(const Vector& per_sample_losses, const SelectionMask& mask) {
  require(static_cast<Eigen::Index>(mask.u.size()) == per_sample_losses.size(),
          "selection_loss: mask/loss size mismatch");
  double sum = 0.0;
  int count = 0;
  for (Eigen::Index i = 0; i < per_sample_losses.size(); ++i) {
    if (mask.u[static_cast<std::size_t>(i)]) {
      sum += per_sample_losses[i];
      ++count;
    }
  }
  require(count >= 1, "selection_loss: at least one sample must be selected");
  return sum / count;
}

SelectionMask small_loss_select(const Vector& per_sample_losses, double alpha,
                                const std::vector<char>* eligible) {
  const auto n = per_sample_losses.size();
  require(n > 0, "small_loss_select: empty batch");
  require(alpha > 0.0 && alpha <= 1.0, "small_loss_select: alpha must lie in (0,1]");
  if (eligible) {
    require(static_cast<Eigen::Index>(eligible->size()) == n,
            "small_loss_select: eligibility/loss size mismatch");
  }

  const int k = std::max(1, static_cast<int>(std::ceil(alpha * static_cast<double>(n))));
  SelectionMask mask;
  mask.u.assign(static_cast<std::size_t>(n), 0);

  int forced = 0;
  std::vector<int> competitors;
  competitors.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    if (eligible && !(*eligible)[static_cast<std::size_t>(i)]) {
      mask.u[static_cast<std::size_t>(i)] = 1;  // never excluded
      ++forced;
    } else {
      competitors.push_back(static_cast<int>(i));
    }
  }
  std::sort(competitors.begin(), competitors.end(), [&](int a, int b) {
    if (per_sample_losses[a] != per_sample_losses[b]) {
      return per_sample_losses[a] < per_sample_losses[b];
    }
    return a < b;  // deterministic tie-break
  });
  const int wanted = std::max(k - forced, 0);
  const int taken = std::min<int>(wanted, static_cast<int>(competitors.size()));
  for (int t = 0; t < taken; ++t) mask.u[static_cast<std::size_t>(competitors[t])] = 1;
  mask.k = forced + taken;
  return mask;
}

double remember_rate(int epoch, const ScheduleParams& params, Branch branch) {
  require(epoch >= 1, "remember_rate: epoch must be >= 1");
  require(params.warmup_epochs >= 1, "remember_rate: warmup must be >= 1 epoch");
  const double tau = branch == Branch::kMixture ? params.tau : params.tau_t;
  const double ramp = static_cast<double>(epoch) / params.warmup_epochs * tau;
  return 1.0 - std::min(ramp, tau);
}

long pseudo_quota(int epoch, long n_target, long n_t_max) {
  require(epoch >= 1, "pseudo_quota: epoch must be >= 1");
  require(n_target >= 0 && n_t_max >= 0, "pseudo_quota: counts must be non-negative");
  const long grown = static_cast<long>(epoch) * n_target / 20;  // floor
  return std::min(grown, n_t_max);
}

ButterflyVariant ButterflyVariant::preset(std::string_view name) {
  if (name == "bnet") return {true, true, true, true};
  if (name == "b-wo-c") return {true, true, true, false};
  if (name == "bnet-s") return {true, false, false, true};
  if (name == "bnet-t") return {false, false, true, true};
  if (name == "bnet-st") return {true, false, true, true};
  if (name == "bnet-m") return {true, true, false, true};
  if (name == "no-check") return {false, false, false, true};
  throw std::invalid_argument("unknown variant preset '" + std::string(name) + "'");
}

const std::vector<std::string>& ButterflyVariant::preset_names() {
  static const std::vector<std::string> names = {"bnet",    "b-wo-c",  "bnet-s",  "bnet-t",
                                                 "bnet-st", "bnet-m", "no-check"};
  return names;
}

Optimizer OptimizerConfig::make() const {
  return kind == Optimizer::Kind::kMomentumSgd ? Optimizer::momentum_sgd(learning_rate, momentum)
                                               : Optimizer::adagrad(learning_rate);
}

namespace {

std::vector<LayerSpec> extractor_specs(const ArchConfig& arch) {
  std::vector<LayerSpec> specs;
  for (int i = 0; i < arch.extractor_layers; ++i) {
    LayerSpec s;
    s.in_dim = i == 0 ? arch.input_dim : arch.hidden;
    s.out_dim = arch.hidden;
    s.activation = Activation::kReLU;
    const bool last = i == arch.extractor_layers - 1;
    s.dropout_rate = last ? arch.dropout : 0.0;
    s.use_batchnorm = last && arch.batchnorm;
    specs.push_back(s);
  }
  return specs;
}

// Mixture heads carry batchnorm on their first block; target heads use
// dropout only, mirroring the reference topology at dense scale.
std::vector<LayerSpec> head_specs(const ArchConfig& arch, bool with_batchnorm) {
  std::vector<LayerSpec> specs;
  for (int i = 0; i < arch.head_layers; ++i) {
    LayerSpec s;
    s.in_dim = arch.hidden;
    const bool last = i == arch.head_layers - 1;
    s.out_dim = last ? arch.num_classes : arch.hidden;
    s.activation = last ? Activation::kIdentity : Activation::kReLU;
    s.dropout_rate = (i == 0 && !last) ? arch.dropout : 0.0;
    s.use_batchnorm = i == 0 && !last && with_batchnorm && arch.batchnorm;
    specs.push_back(s);
  }
  return specs;
}

}  // namespace

ModelBundle ModelBundle::create(const ArchConfig& arch, const OptimizerConfig& optim,
                                std::uint64_t seed) {
  require(arch.input_dim > 0 && arch.num_classes >= 2, "ModelBundle: bad dimensions");
  require(arch.extractor_layers >= 1 && arch.head_layers >= 1, "ModelBundle: need layers");
  Rng rng_ext(derive_seed(seed, "init-extractor"));
  Rng rng_f1(derive_seed(seed, "init-f1"));
  Rng rng_f2(derive_seed(seed, "init-f2"));
  Rng rng_ft1(derive_seed(seed, "init-ft1"));
  Rng rng_ft2(derive_seed(seed, "init-ft2"));
  return ModelBundle{
      Network(extractor_specs(arch), rng_ext),
      Network(head_specs(arch, true), rng_f1),
      Network(head_specs(arch, true), rng_f2),
      Network(head_specs(arch, false), rng_ft1),
      Network(head_specs(arch, false), rng_ft2),
      optim.make(), optim.make(), optim.make(), optim.make(), optim.make(),
  };
}

Matrix head_pair_softmax(const Network& extractor, const Network& a, const Network& b,
                         const MatrixRef& features) {
  const Matrix feat = extractor.evaluate(features);
  return 0.5 * (softmax(a.evaluate(feat)) + softmax(b.evaluate(feat)));
}

namespace {

void add_pair_regularizer(const Network& head_a, const Network& head_b, double penalty,
                          RegularizerNorm norm, Gradients* grads_a, Gradients* grads_b) {
  const Matrix& wa = head_a.layers().front().weights();
  const Matrix& wb = head_b.layers().front().weights();
  const Matrix s = wa.transpose() * wb;
  if (norm == RegularizerNorm::kAbsSum) {
    const Matrix sgn = s.unaryExpr([](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
    grads_a->layers.front().w += penalty * (wb * sgn.transpose());
    grads_b->layers.front().w += penalty * (wa * sgn);
  } else {
    const double s_norm = s.norm();
    if (s_norm > 0.0) {
      grads_a->layers.front().w += (penalty / s_norm) * (wb * s.transpose());
      grads_b->layers.front().w += (penalty / s_norm) * (wa * s);
    }
  }
}

}  // namespace

CheckingStats checking_step(Network& extractor, Network& head_a, Network& head_b,
                            Optimizer& opt_extractor, Optimizer& opt_a, Optimizer& opt_b,
                            const BatchData& batch, const CheckingOptions& options,
                            Rng* dropout_rng) {
  require(batch.features.rows() > 0, "checking_step: empty batch");

  auto ext = extractor.forward(batch.features, Mode::kTrain, dropout_rng);
  auto fwd_a = head_a.forward(ext.output, Mode::kTrain, dropout_rng);
  auto fwd_b = head_b.forward(ext.output, Mode::kTrain, dropout_rng);

  const auto ce_a = cross_entropy(fwd_a.output, batch.labels);
  const auto ce_b = cross_entropy(fwd_b.output, batch.labels);

  CheckingStats stats;
  stats.mask_a = small_loss_select(ce_a.per_sample, options.remember_rate, options.eligible);
  stats.mask_b = small_loss_select(ce_b.per_sample, options.remember_rate, options.eligible);
  // Each head descends the loss over its peer's selection.
  stats.cross_loss_a = selection_loss(ce_a.per_sample, stats.mask_b);
  stats.cross_loss_b = selection_loss(ce_b.per_sample, stats.mask_a);
  if (!std::isfinite(stats.cross_loss_a) || !std::isfinite(stats.cross_loss_b)) {
    throw std::runtime_error("checking_step: non-finite loss");
  }

  const auto n = batch.features.rows();
  Vector weight_a = Vector::Zero(n);
  Vector weight_b = Vector::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (stats.mask_b.u[static_cast<std::size_t>(i)]) weight_a[i] = 1.0 / stats.mask_b.k;
    if (stats.mask_a.u[static_cast<std::size_t>(i)]) weight_b[i] = 1.0 / stats.mask_a.k;
  }

  auto back_a = head_a.backward(fwd_a.tape, cross_entropy_grad(fwd_a.output, batch.labels, weight_a));
  auto back_b = head_b.backward(fwd_b.tape, cross_entropy_grad(fwd_b.output, batch.labels, weight_b));
  if (options.penalty > 0.0) {
    add_pair_regularizer(head_a, head_b, options.penalty, options.reg_norm, &back_a.grads,
                         &back_b.grads);
  }
  auto back_ext = extractor.backward(ext.tape, back_a.input_grad + back_b.input_grad);

  opt_a.step(head_a, back_a.grads);
  opt_b.step(head_b, back_b.grads);
  if (options.update_extractor) opt_extractor.step(extractor, back_ext.grads);
  return stats;
}

std::vector<std::pair<int, int>> assign_pseudo_labels(const Network& extractor,
                                                      const Network& f1, const Network& f2,
                                                      const MatrixRef& target_features,
                                                      long quota,
                                                      const PseudoLabelPolicy& policy, Rng& rng) {
  require(quota >= 0, "assign_pseudo_labels: quota must be non-negative");
  require(policy.confidence_threshold > 0.5 && policy.confidence_threshold <= 1.0,
          "assign_pseudo_labels: confidence threshold must lie in (0.5, 1]");
  std::vector<std::pair<int, int>> out;
  const long n_t = target_features.rows();
  const long take = std::min(quota, n_t);
  if (take <= 0) return out;

  const auto perm = rng.permutation(static_cast<int>(n_t));
  Matrix sub(take, target_features.cols());
  for (long i = 0; i < take; ++i) sub.row(i) = target_features.row(perm[static_cast<std::size_t>(i)]);

  const Matrix feat = extractor.evaluate(sub);
  const Matrix p1 = softmax(f1.evaluate(feat));
  const Matrix p2 = softmax(f2.evaluate(feat));
  for (long i = 0; i < take; ++i) {
    Eigen::Index arg1 = 0, arg2 = 0;
    const double max1 = p1.row(i).maxCoeff(&arg1);
    const double max2 = p2.row(i).maxCoeff(&arg2);
    if (arg1 == arg2 && std::max(max1, max2) >= policy.confidence_threshold) {
      out.emplace_back(perm[static_cast<std::size_t>(i)], static_cast<int>(arg1));
    }
  }
  return out;
}

namespace {

struct MixtureItem {
  bool from_source = true;
  int index = 0;
  int label = 0;
};

// Fetch a mini-batch from the shuffled item list, cycling with wraparound
// when steps_per_epoch * batch exceeds the set size.
BatchData fetch_batch(const Dataset& source, const MatrixRef& target_features,
                      const std::vector<MixtureItem>& items, const std::vector<int>& order,
                      long start, int batch_size, std::vector<MixtureItem>* batch_items) {
  const auto n = static_cast<long>(items.size());
  BatchData batch;
  batch.features.resize(batch_size, source.features.cols());
  batch.labels.resize(static_cast<std::size_t>(batch_size));
  batch_items->resize(static_cast<std::size_t>(batch_size));
  for (int i = 0; i < batch_size; ++i) {
    const int pos = order[static_cast<std::size_t>((start + i) % n)];
    const MixtureItem& item = items[static_cast<std::size_t>(pos)];
    if (item.from_source) {
      batch.features.row(i) = source.features.row(item.index);
    } else {
      batch.features.row(i) = target_features.row(item.index);
    }
    batch.labels[static_cast<std::size_t>(i)] = item.label;
    (*batch_items)[static_cast<std::size_t>(i)] = item;
  }
  return batch;
}

void validate_train_config(const TrainConfig& config) {
  require(config.schedule.tau >= 0.0 && config.schedule.tau < 1.0, "config: tau must lie in [0,1)");
  require(config.schedule.tau_t >= 0.0 && config.schedule.tau_t < 1.0,
          "config: tau_t must lie in [0,1)");
  require(config.schedule.warmup_epochs >= 1, "config: warmup epochs must be >= 1");
  require(config.schedule.total_epochs >= config.schedule.warmup_epochs,
          "config: total epochs must be >= warmup epochs");
  require(config.schedule.total_epochs >= 1, "config: total epochs must be >= 1");
  require(config.steps_per_epoch >= 1, "config: steps per epoch must be >= 1");
  require(config.batch_size >= 2, "config: batch size must be >= 2");
  require(config.penalty >= 0.0, "config: penalty must be non-negative");
  require(config.policy.n_init >= 0 && config.policy.n_t_max >= 0,
          "config: pseudo-label counts must be non-negative");
  require(config.policy.confidence_threshold > 0.5 && config.policy.confidence_threshold <= 1.0,
          "config: confidence threshold must lie in (0.5, 1]");
}

}  // namespace

void train_butterfly(const Dataset& noisy_source, const MatrixRef& target_features,
                     ModelBundle& bundle, const TrainConfig& config, std::uint64_t run_seed,
                     const EpochCallback& on_epoch) {
  validate_train_config(config);
  require(noisy_source.size() > 0, "train_butterfly: empty source dataset");
  require(target_features.rows() > 0, "train_butterfly: empty target dataset");
  require(target_features.cols() == noisy_source.features.cols(),
          "train_butterfly: source dim " + std::to_string(noisy_source.features.cols()) +
              " vs target dim " + std::to_string(target_features.cols()));

  const auto n_source = static_cast<long>(noisy_source.size());
  const auto n_target = static_cast<long>(target_features.rows());
  const ButterflyVariant& variant = config.variant;

  std::vector<MixtureItem> source_items(static_cast<std::size_t>(n_source));
  for (long i = 0; i < n_source; ++i) {
    source_items[static_cast<std::size_t>(i)] = {true, static_cast<int>(i),
                                                 noisy_source.labels[static_cast<std::size_t>(i)]};
  }

  // Epoch 1 bootstraps the pseudo-labeled target set with the noisy source.
  std::vector<MixtureItem> branch2_items = source_items;
  bool branch2_is_bootstrap = true;
  long quota = config.policy.n_init;

  Rng rng_dropout_b1(derive_seed(run_seed, "dropout-b1"));
  Rng rng_dropout_b2(derive_seed(run_seed, "dropout-b2"));

  ModelBundle last_good = bundle;

  for (int epoch = 1; epoch <= config.schedule.total_epochs; ++epoch) {
    EpochTrace trace;
    trace.epoch = epoch;
    trace.rate_mixture = remember_rate(epoch, config.schedule, Branch::kMixture);
    trace.rate_target = remember_rate(epoch, config.schedule, Branch::kTarget);

    std::vector<MixtureItem> mixture = source_items;
    if (!branch2_is_bootstrap) {
      mixture.insert(mixture.end(), branch2_items.begin(), branch2_items.end());
    }

    const auto order1 = Rng(derive_seed(run_seed, "b1-shuffle", static_cast<std::uint64_t>(epoch)))
                            .permutation(static_cast<int>(mixture.size()));
    const auto order2 = Rng(derive_seed(run_seed, "b2-shuffle", static_cast<std::uint64_t>(epoch)))
                            .permutation(static_cast<int>(branch2_items.size()));

    double loss_sum_b1 = 0.0, loss_sum_b2 = 0.0;
    std::vector<MixtureItem> batch_items;
    std::vector<char> eligible;

    try {
      for (int step = 0; step < config.steps_per_epoch; ++step) {
        // Branch-I on the mixture domain.
        BatchData batch1 = fetch_batch(noisy_source, target_features, mixture, order1,
                                       static_cast<long>(step) * config.batch_size,
                                       config.batch_size, &batch_items);
        CheckingOptions opts1;
        opts1.remember_rate = trace.rate_mixture;
        opts1.penalty = variant.use_regularizer ? config.penalty : 0.0;
        opts1.reg_norm = config.reg_norm;
        if (!variant.check_source_in_mixture && !variant.check_target_in_mixture) {
          opts1.remember_rate = 1.0;  // checking disabled: keep everything
        } else if (!variant.check_source_in_mixture || !variant.check_target_in_mixture) {
          eligible.resize(batch_items.size());
          for (std::size_t i = 0; i < batch_items.size(); ++i) {
            eligible[i] = batch_items[i].from_source ? variant.check_source_in_mixture
                                                     : variant.check_target_in_mixture;
          }
          opts1.eligible = &eligible;
        }
        const auto stats1 = checking_step(bundle.extractor, bundle.f1, bundle.f2,
                                          bundle.opt_extractor, bundle.opt_f1, bundle.opt_f2,
                                          batch1, opts1, &rng_dropout_b1);
        for (std::size_t i = 0; i < batch_items.size(); ++i) {
          if (!batch_items[i].from_source) continue;
          if (stats1.mask_a.u[i]) trace.selected_source.push_back(batch_items[i].index);
          if (stats1.mask_b.u[i]) trace.selected_source.push_back(batch_items[i].index);
        }
        loss_sum_b1 += 0.5 * (stats1.cross_loss_a + stats1.cross_loss_b);

        // Branch-II on the pseudo-labeled target set.
        BatchData batch2 = fetch_batch(noisy_source, target_features, branch2_items, order2,
                                       static_cast<long>(step) * config.batch_size,
                                       config.batch_size, &batch_items);
        CheckingOptions opts2;
        opts2.remember_rate = variant.check_branch2 ? trace.rate_target : 1.0;
        opts2.update_extractor = config.extractor_from_branch2;
        const auto stats2 = checking_step(bundle.extractor, bundle.ft1, bundle.ft2,
                                          bundle.opt_extractor, bundle.opt_ft1, bundle.opt_ft2,
                                          batch2, opts2, &rng_dropout_b2);
        for (std::size_t i = 0; i < batch_items.size(); ++i) {
          if (batch_items[i].from_source) continue;
          if (stats2.mask_a.u[i]) {
            trace.selected_pseudo.emplace_back(batch_items[i].index, batch_items[i].label);
          }
          if (stats2.mask_b.u[i]) {
            trace.selected_pseudo.emplace_back(batch_items[i].index, batch_items[i].label);
          }
        }
        loss_sum_b2 += 0.5 * (stats2.cross_loss_a + stats2.cross_loss_b);
      }
    } catch (const std::runtime_error& err) {
      // Numeric blowup: park the last healthy bundle and report where it is.
      std::string where = "epoch " + std::to_string(epoch);
      if (!config.failure_checkpoint_path.empty()) {
        save_bundle_checkpoint(config.failure_checkpoint_path, last_good);
        where += "; last good parameters (end of epoch " + std::to_string(epoch - 1) +
                 ") saved to " + config.failure_checkpoint_path;
      }
      throw std::runtime_error(std::string(err.what()) + " [aborted at " + where + "]");
    }

    Rng rng_pseudo(derive_seed(run_seed, "pseudo", static_cast<std::uint64_t>(epoch)));
    trace.harvest = assign_pseudo_labels(bundle.extractor, bundle.f1, bundle.f2, target_features,
                                         quota, config.policy, rng_pseudo);
    if (!trace.harvest.empty()) {
      branch2_items.clear();
      branch2_items.reserve(trace.harvest.size());
      for (const auto& [idx, label] : trace.harvest) {
        branch2_items.push_back({false, idx, label});
      }
      branch2_is_bootstrap = false;
    }
    // else: keep the previous pseudo-labeled set for one more epoch.

    quota = pseudo_quota(epoch, n_target, config.policy.n_t_max);

    trace.mean_selected_loss_b1 = loss_sum_b1 / config.steps_per_epoch;
    trace.mean_selected_loss_b2 = loss_sum_b2 / config.steps_per_epoch;
    if (on_epoch) on_epoch(trace, bundle);
    last_good = bundle;
  }
}

TwoStepOutputs train_two_step(const Dataset& noisy_source, const MatrixRef& target_features,
                              ModelBundle& bundle, const ArchConfig& arch,
                              const OptimizerConfig& optim, const TrainConfig& config,
                              std::uint64_t run_seed, const EpochCallback& on_epoch) {
  validate_train_config(config);
  require(noisy_source.size() > 0, "train_two_step: empty source dataset");

  // Stage 1: plain co-teaching on the noisy source, no target data involved.
  ModelBundle stage1 = ModelBundle::create(arch, optim, derive_seed(run_seed, "two-step-stage1"));
  Rng rng_dropout(derive_seed(run_seed, "ts1-dropout"));
  std::vector<MixtureItem> items(static_cast<std::size_t>(noisy_source.size()));
  for (long i = 0; i < noisy_source.size(); ++i) {
    items[static_cast<std::size_t>(i)] = {true, static_cast<int>(i),
                                          noisy_source.labels[static_cast<std::size_t>(i)]};
  }
  std::vector<MixtureItem> batch_items;
  for (int epoch = 1; epoch <= config.schedule.total_epochs; ++epoch) {
    const auto order = Rng(derive_seed(run_seed, "ts1-shuffle", static_cast<std::uint64_t>(epoch)))
                           .permutation(static_cast<int>(items.size()));
    CheckingOptions opts;
    opts.remember_rate = remember_rate(epoch, config.schedule, Branch::kMixture);
    for (int step = 0; step < config.steps_per_epoch; ++step) {
      BatchData batch = fetch_batch(noisy_source, target_features, items, order,
                                    static_cast<long>(step) * config.batch_size,
                                    config.batch_size, &batch_items);
      checking_step(stage1.extractor, stage1.f1, stage1.f2, stage1.opt_extractor, stage1.opt_f1,
                    stage1.opt_f2, batch, opts, &rng_dropout);
    }
  }

  // Relabel every source sample with the denoised classifier pair.
  const Matrix probs =
      head_pair_softmax(stage1.extractor, stage1.f1, stage1.f2, noisy_source.features);
  TwoStepOutputs out;
  out.relabeled_source.resize(static_cast<std::size_t>(noisy_source.size()));
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    Eigen::Index arg = 0;
    probs.row(i).maxCoeff(&arg);
    out.relabeled_source[static_cast<std::size_t>(i)] = static_cast<int>(arg);
  }

  // Stage 2: the adaptation loop with all checks off on the relabeled source.
  Dataset relabeled = noisy_source;
  relabeled.labels = out.relabeled_source;
  TrainConfig stage2 = config;
  stage2.variant = ButterflyVariant::preset("no-check");
  train_butterfly(relabeled, target_features, bundle, stage2,
                  derive_seed(run_seed, "two-step-stage2"), on_epoch);
  return out;
}

void save_bundle_checkpoint(const std::string& path, const ModelBundle& bundle) {
  save_checkpoint(path, {{"extractor", &bundle.extractor},
                         {"f1", &bundle.f1},
                         {"f2", &bundle.f2},
                         {"ft1", &bundle.ft1},
                         {"ft2", &bundle.ft2}});
}

void load_bundle_checkpoint(const std::string& path, ModelBundle& bundle) {
  auto nets = load_checkpoint(path);
  for (auto& [name, net] : nets) {
    if (name == "extractor") bundle.extractor = std::move(net);
    else if (name == "f1") bundle.f1 = std::move(net);
    else if (name == "f2") bundle.f2 = std::move(net);
    else if (name == "ft1") bundle.ft1 = std::move(net);
    else if (name == "ft2") bundle.ft2 = std::move(net);
    else throw std::runtime_error("bundle checkpoint: unexpected network '" + name + "'");
  }
}

}  // namespace wudalab
