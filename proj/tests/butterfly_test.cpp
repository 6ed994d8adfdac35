#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support/finite_diff.hpp"

#include "wudalab/butterfly.hpp"
#include "wudalab/metrics.hpp"

#include <cmath>
#include <filesystem>

using namespace wudalab;

namespace {

// Exhaustive oracle: the Eq-11 value of the best mask with exactly k selected
// samples, over all C(n, k) subsets.
double best_selection_loss_by_enumeration(const Vector& losses, int k) {
  const int n = static_cast<int>(losses.size());
  double best = std::numeric_limits<double>::infinity();
  for (unsigned subset = 0; subset < (1u << n); ++subset) {
    if (__builtin_popcount(subset) != k) continue;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      if (subset & (1u << i)) sum += losses[i];
    }
    best = std::min(best, sum / k);
  }
  return best;
}

ArchConfig tiny_arch(int dim, int classes, double dropout = 0.0, bool batchnorm = false) {
  ArchConfig arch;
  arch.input_dim = dim;
  arch.num_classes = classes;
  arch.hidden = 8;
  arch.extractor_layers = 1;
  arch.head_layers = 1;
  arch.dropout = dropout;
  arch.batchnorm = batchnorm;
  return arch;
}

BatchData random_batch(int n, int dim, int classes, std::uint64_t seed) {
  BatchData batch;
  batch.features.resize(n, dim);
  batch.labels.resize(static_cast<std::size_t>(n));
  Rng rng(seed);
  for (Eigen::Index i = 0; i < batch.features.size(); ++i) {
    batch.features.data()[i] = rng.normal();
  }
  for (int i = 0; i < n; ++i) {
    batch.labels[static_cast<std::size_t>(i)] = static_cast<int>(rng.below(classes));
  }
  return batch;
}

// Single-layer head whose logits are a constant distribution: zero weights,
// bias = log(probs).
void set_constant_head(Network& head, const std::vector<double>& probs) {
  auto& layer = head.layers().front();
  layer.weights().setZero();
  for (Eigen::Index i = 0; i < layer.bias().size(); ++i) {
    layer.bias()[i] = std::log(probs[static_cast<std::size_t>(i)]);
  }
  head.bump_version();
}

}  // namespace

TEST_CASE("selection_loss: full mask is the plain mean") {
  Vector losses(3);
  losses << 1.0, 3.0, 5.0;
  SelectionMask all{{1, 1, 1}, 3};
  CHECK(selection_loss(losses, all) == doctest::Approx(3.0));
}

TEST_CASE("selection_loss: Eq-11 arithmetic on a partial mask") {
  Vector losses(3);
  losses << 1.0, 3.0, 5.0;
  SelectionMask mask{{1, 0, 1}, 2};
  CHECK(selection_loss(losses, mask) == doctest::Approx(3.0));
}

TEST_CASE("selection_loss: single selection returns that loss") {
  Vector losses(4);
  losses << 0.4, 0.9, 0.1, 2.0;
  SelectionMask mask{{0, 0, 0, 1}, 1};
  CHECK(selection_loss(losses, mask) == doctest::Approx(2.0));
}

TEST_CASE("selection_loss: all-zero mask violates the >=1 constraint") {
  Vector losses(2);
  losses << 1.0, 2.0;
  SelectionMask none{{0, 0}, 0};
  CHECK_THROWS_AS(selection_loss(losses, none), std::invalid_argument);
}

TEST_CASE("small_loss_select: picks the k smallest") {
  Vector losses(4);
  losses << 0.9, 0.1, 0.4, 0.7;
  const auto mask = small_loss_select(losses, 0.5);
  CHECK(mask.k == 2);
  CHECK(mask.u == std::vector<char>{0, 1, 1, 0});
  // Exhaustive enumeration confirms minimality at this cardinality.
  CHECK(selection_loss(losses, mask) ==
        doctest::Approx(best_selection_loss_by_enumeration(losses, 2)));
}

TEST_CASE("small_loss_select: alpha=1 selects everything") {
  Vector losses(5);
  losses << 5, 4, 3, 2, 1;
  const auto mask = small_loss_select(losses, 1.0);
  CHECK(mask.k == 5);
}

TEST_CASE("small_loss_select: ties break toward the lowest index") {
  Vector losses = Vector::Constant(6, 0.5);
  const auto mask = small_loss_select(losses, 0.5);
  CHECK(mask.k == 3);
  CHECK(mask.u == std::vector<char>{1, 1, 1, 0, 0, 0});
}

TEST_CASE("small_loss_select: empty batch rejected") {
  CHECK_THROWS_AS(small_loss_select(Vector(), 0.5), std::invalid_argument);
}

TEST_CASE("small_loss_select: cardinality is max(1, ceil(alpha*n))") {
  Rng rng(3);
  for (int n : {1, 2, 5, 7, 128}) {
    Vector losses(n);
    for (int i = 0; i < n; ++i) losses[i] = rng.uniform();
    for (double alpha : {0.01, 0.3, 0.6, 0.92, 1.0}) {
      const auto mask = small_loss_select(losses, alpha);
      CHECK(mask.k == std::max(1, static_cast<int>(std::ceil(alpha * n))));
      int ones = 0;
      for (const char u : mask.u) ones += u;
      CHECK(ones == mask.k);
    }
  }
}

TEST_CASE("small_loss_select: enumeration oracle over random small batches") {
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(8));
    Vector losses(n);
    for (int i = 0; i < n; ++i) losses[i] = rng.uniform(0.0, 4.0);
    const double alpha = rng.uniform(0.05, 1.0);
    const auto mask = small_loss_select(losses, alpha);
    CHECK(selection_loss(losses, mask) ==
          doctest::Approx(best_selection_loss_by_enumeration(losses, mask.k)).epsilon(1e-12));
  }
}

TEST_CASE("small_loss_select: ineligible samples are always kept") {
  Vector losses(6);
  losses << 9.0, 0.1, 8.0, 0.2, 7.0, 0.3;
  std::vector<char> eligible = {0, 1, 0, 1, 0, 1};  // the large losses never compete
  const auto mask = small_loss_select(losses, 0.5, &eligible);
  CHECK(mask.u[0]);
  CHECK(mask.u[2]);
  CHECK(mask.u[4]);
  // k = 3, three forced: no eligible sample makes the cut.
  CHECK(mask.k == 3);
  eligible = {1, 1, 1, 1, 1, 0};
  const auto mask2 = small_loss_select(losses, 0.5, &eligible);
  CHECK(mask2.u[5]);              // forced
  CHECK(mask2.u[1]);
  CHECK(mask2.u[3]);              // two smallest eligible fill k
  CHECK(mask2.k == 3);
}

TEST_CASE("remember_rate: warm-up value at T=2 with the digit hyperparameters") {
  ScheduleParams p{0.4, 0.05, 5, 30};
  CHECK(remember_rate(2, p, Branch::kMixture) == doctest::Approx(0.84).epsilon(1e-12));
}

TEST_CASE("remember_rate: plateau at 1 - tau after warm-up") {
  ScheduleParams p{0.4, 0.05, 5, 30};
  for (int t = 5; t <= 30; ++t) {
    CHECK(remember_rate(t, p, Branch::kMixture) == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(remember_rate(t, p, Branch::kTarget) == doctest::Approx(0.95).epsilon(1e-12));
  }
}

TEST_CASE("remember_rate: tau=0 keeps everything forever") {
  ScheduleParams p{0.0, 0.0, 5, 30};
  for (int t = 1; t <= 30; ++t) CHECK(remember_rate(t, p, Branch::kMixture) == 1.0);
}

TEST_CASE("pseudo_quota: growth, cap and starvation") {
  CHECK(pseudo_quota(4, 10000, 15000) == 2000);
  CHECK(pseudo_quota(40, 10000, 15000) == 15000);
  CHECK(pseudo_quota(7, 10000, 0) == 0);
  // Non-decreasing in T, never above the cap.
  long prev = 0;
  for (int t = 1; t <= 60; ++t) {
    const long q = pseudo_quota(t, 10000, 15000);
    CHECK(q >= prev);
    CHECK(q <= 15000);
    prev = q;
  }
}

TEST_CASE("variant presets: flags match their names") {
  const auto bnet = ButterflyVariant::preset("bnet");
  CHECK(bnet.check_source_in_mixture);
  CHECK(bnet.check_target_in_mixture);
  CHECK(bnet.check_branch2);
  CHECK(bnet.use_regularizer);
  const auto woc = ButterflyVariant::preset("b-wo-c");
  CHECK(woc.check_branch2);
  CHECK_FALSE(woc.use_regularizer);
  const auto s = ButterflyVariant::preset("bnet-s");
  CHECK(s.check_source_in_mixture);
  CHECK_FALSE(s.check_target_in_mixture);
  CHECK_FALSE(s.check_branch2);
  const auto st = ButterflyVariant::preset("bnet-st");
  CHECK(st.check_source_in_mixture);
  CHECK_FALSE(st.check_target_in_mixture);
  CHECK(st.check_branch2);
  const auto m = ButterflyVariant::preset("bnet-m");
  CHECK(m.check_source_in_mixture);
  CHECK(m.check_target_in_mixture);
  CHECK_FALSE(m.check_branch2);
  const auto none = ButterflyVariant::preset("no-check");
  CHECK_FALSE(none.check_source_in_mixture);
  CHECK_FALSE(none.check_target_in_mixture);
  CHECK_FALSE(none.check_branch2);
  CHECK_THROWS_AS(ButterflyVariant::preset("bnet-typo"), std::invalid_argument);
}

TEST_CASE("model bundle: the four heads start from distinct seed streams") {
  auto arch = tiny_arch(6, 3);
  arch.head_layers = 2;
  const auto bundle = ModelBundle::create(arch, OptimizerConfig{}, 5);
  CHECK((bundle.f1.flat_params() - bundle.f2.flat_params()).cwiseAbs().maxCoeff() > 0.0);
  CHECK((bundle.ft1.flat_params() - bundle.ft2.flat_params()).cwiseAbs().maxCoeff() > 0.0);
  // Mixture heads consume the extractor's output dimension.
  CHECK(bundle.f1.input_dim() == arch.hidden);
  CHECK(bundle.extractor.output_dim() == arch.hidden);
  CHECK(bundle.ft2.output_dim() == arch.num_classes);
}

TEST_CASE("model bundle: deeper stacks train end to end") {
  ArchConfig arch;
  arch.input_dim = 5;
  arch.num_classes = 3;
  arch.hidden = 8;
  arch.extractor_layers = 3;
  arch.head_layers = 3;
  arch.dropout = 0.25;
  arch.batchnorm = true;
  auto bundle = ModelBundle::create(arch, OptimizerConfig{}, 61);
  REQUIRE(bundle.extractor.layers().size() == 3);
  REQUIRE(bundle.f1.layers().size() == 3);
  // Batchnorm sits on the last extractor block and the first mixture-head
  // block; the target heads run dropout only.
  CHECK(bundle.extractor.layers()[2].spec().use_batchnorm);
  CHECK_FALSE(bundle.extractor.layers()[0].spec().use_batchnorm);
  CHECK(bundle.f1.layers()[0].spec().use_batchnorm);
  CHECK_FALSE(bundle.ft1.layers()[0].spec().use_batchnorm);
  CHECK(bundle.ft1.layers()[0].spec().dropout_rate > 0.0);

  const auto batch = random_batch(16, 5, 3, 11);
  Rng drop(1);
  CheckingOptions opts;
  opts.remember_rate = 0.75;
  const auto stats = checking_step(bundle.extractor, bundle.f1, bundle.f2, bundle.opt_extractor,
                                   bundle.opt_f1, bundle.opt_f2, batch, opts, &drop);
  CHECK(stats.mask_a.k == 12);
  CHECK(bundle.extractor.flat_params().allFinite());
}

TEST_CASE("checking_step: alpha=1 reduces to a full-batch step for both heads") {
  auto arch = tiny_arch(4, 3);
  auto bundle = ModelBundle::create(arch, OptimizerConfig{}, 11);
  const auto batch = random_batch(16, 4, 3, 5);
  CheckingOptions opts;
  opts.remember_rate = 1.0;
  const auto stats = checking_step(bundle.extractor, bundle.f1, bundle.f2, bundle.opt_extractor,
                                   bundle.opt_f1, bundle.opt_f2, batch, opts, nullptr);
  CHECK(stats.mask_a.k == 16);
  CHECK(stats.mask_b.k == 16);
}

TEST_CASE("checking_step: identical heads produce identical masks and updates") {
  auto arch = tiny_arch(4, 3);
  auto bundle = ModelBundle::create(arch, OptimizerConfig{}, 21);
  bundle.f2 = bundle.f1;  // same parameters
  const auto batch = random_batch(12, 4, 3, 6);
  CheckingOptions opts;
  opts.remember_rate = 0.5;
  const auto stats = checking_step(bundle.extractor, bundle.f1, bundle.f2, bundle.opt_extractor,
                                   bundle.opt_f1, bundle.opt_f2, batch, opts, nullptr);
  CHECK(stats.mask_a.u == stats.mask_b.u);
  CHECK((bundle.f1.flat_params() - bundle.f2.flat_params()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("checking_step: the applied update follows the peer's selection") {
  // Heads with different initializations disagree on the small-loss subset;
  // the delta applied to head a must equal -lr * grad of the loss under head
  // b's mask, recomputed on a fresh tape.
  auto arch = tiny_arch(5, 4);
  OptimizerConfig optim;
  optim.learning_rate = 0.05;
  optim.momentum = 0.0;  // first step of momentum SGD is plain SGD anyway
  auto bundle = ModelBundle::create(arch, optim, 33);
  const auto batch = random_batch(10, 5, 4, 7);

  const Network extractor_before = bundle.extractor;
  const Network f1_before = bundle.f1;
  const Network f2_before = bundle.f2;

  CheckingOptions opts;
  opts.remember_rate = 0.5;
  const auto stats = checking_step(bundle.extractor, bundle.f1, bundle.f2, bundle.opt_extractor,
                                   bundle.opt_f1, bundle.opt_f2, batch, opts, nullptr);
  REQUIRE(stats.mask_a.u != stats.mask_b.u);  // the batch is adversarial enough

  // Fresh-tape recomputation of grad_theta1 L(theta1, u2).
  Network ext_copy = extractor_before;
  Network f1_copy = f1_before;
  auto ext_fwd = ext_copy.forward(batch.features, Mode::kTrain, nullptr);
  auto f1_fwd = f1_copy.forward(ext_fwd.output, Mode::kTrain, nullptr);
  Vector weights = Vector::Zero(10);
  for (int i = 0; i < 10; ++i) {
    if (stats.mask_b.u[static_cast<std::size_t>(i)]) weights[i] = 1.0 / stats.mask_b.k;
  }
  const auto back =
      f1_copy.backward(f1_fwd.tape, cross_entropy_grad(f1_fwd.output, batch.labels, weights));
  const Vector expected_delta = -optim.learning_rate * f1_copy.flatten(back.grads);
  const Vector applied_delta = bundle.f1.flat_params() - f1_before.flat_params();
  CHECK((applied_delta - expected_delta).cwiseAbs().maxCoeff() < 1e-10);

  // And f2's update used mask u1.
  Network ext_copy2 = extractor_before;
  Network f2_copy = f2_before;
  auto ext_fwd2 = ext_copy2.forward(batch.features, Mode::kTrain, nullptr);
  auto f2_fwd = f2_copy.forward(ext_fwd2.output, Mode::kTrain, nullptr);
  Vector weights2 = Vector::Zero(10);
  for (int i = 0; i < 10; ++i) {
    if (stats.mask_a.u[static_cast<std::size_t>(i)]) weights2[i] = 1.0 / stats.mask_a.k;
  }
  const auto back2 =
      f2_copy.backward(f2_fwd.tape, cross_entropy_grad(f2_fwd.output, batch.labels, weights2));
  const Vector applied_delta2 = bundle.f2.flat_params() - f2_before.flat_params();
  CHECK((applied_delta2 + optim.learning_rate * f2_copy.flatten(back2.grads)).cwiseAbs().maxCoeff() <
        1e-10);
}

TEST_CASE("checking_step: shared extractor accumulates both heads' gradients") {
  auto arch = tiny_arch(5, 4);
  OptimizerConfig optim;
  optim.learning_rate = 0.05;
  optim.momentum = 0.0;
  auto bundle = ModelBundle::create(arch, optim, 37);
  const auto batch = random_batch(10, 5, 4, 8);
  const Network ext_before = bundle.extractor;
  const Network f1_before = bundle.f1;
  const Network f2_before = bundle.f2;

  CheckingOptions opts;
  opts.remember_rate = 0.7;
  const auto stats = checking_step(bundle.extractor, bundle.f1, bundle.f2, bundle.opt_extractor,
                                   bundle.opt_f1, bundle.opt_f2, batch, opts, nullptr);

  Network ext_copy = ext_before;
  Network f1_copy = f1_before;
  Network f2_copy = f2_before;
  auto ext_fwd = ext_copy.forward(batch.features, Mode::kTrain, nullptr);
  auto f1_fwd = f1_copy.forward(ext_fwd.output, Mode::kTrain, nullptr);
  auto f2_fwd = f2_copy.forward(ext_fwd.output, Mode::kTrain, nullptr);
  const auto n = batch.features.rows();
  Vector wa = Vector::Zero(n), wb = Vector::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (stats.mask_b.u[static_cast<std::size_t>(i)]) wa[i] = 1.0 / stats.mask_b.k;
    if (stats.mask_a.u[static_cast<std::size_t>(i)]) wb[i] = 1.0 / stats.mask_a.k;
  }
  auto back1 = f1_copy.backward(f1_fwd.tape, cross_entropy_grad(f1_fwd.output, batch.labels, wa));
  auto back2 = f2_copy.backward(f2_fwd.tape, cross_entropy_grad(f2_fwd.output, batch.labels, wb));
  auto back_ext = ext_copy.backward(ext_fwd.tape, back1.input_grad + back2.input_grad);
  const Vector expected = -optim.learning_rate * ext_copy.flatten(back_ext.grads);
  const Vector applied = bundle.extractor.flat_params() - ext_before.flat_params();
  CHECK((applied - expected).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("checking_step: pair regularizer gradient matches finite differences") {
  auto arch = tiny_arch(5, 4);
  OptimizerConfig optim;
  optim.learning_rate = 0.02;
  optim.momentum = 0.0;
  const double penalty = 0.3;
  const auto batch = random_batch(12, 5, 4, 9);

  for (const auto norm : {RegularizerNorm::kAbsSum, RegularizerNorm::kFrobenius}) {
    auto bundle = ModelBundle::create(arch, optim, 41);
    const Network ext_before = bundle.extractor;
    const Network f1_before = bundle.f1;
    const Matrix w2_before = bundle.f2.layers().front().weights();

    CheckingOptions opts;
    opts.remember_rate = 1.0;
    opts.penalty = penalty;
    opts.reg_norm = norm;
    checking_step(bundle.extractor, bundle.f1, bundle.f2, bundle.opt_extractor, bundle.opt_f1,
                  bundle.opt_f2, batch, opts, nullptr);

    const Matrix ext_out = ext_before.evaluate(batch.features);
    const auto loss = [&](Network& head) {
      const double data_term = cross_entropy(head.evaluate(ext_out), batch.labels).mean;
      const Matrix s = head.layers().front().weights().transpose() * w2_before;
      const double reg = norm == RegularizerNorm::kAbsSum ? s.cwiseAbs().sum() : s.norm();
      return data_term + penalty * reg;
    };
    const Vector numeric = testing::finite_diff_gradient(f1_before, loss, 1e-5);
    const Vector applied = bundle.f1.flat_params() - f1_before.flat_params();
    CHECK((applied + optim.learning_rate * numeric).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("assign_pseudo_labels: one confident head plus agreement labels the point") {
  auto arch = tiny_arch(4, 4);
  auto bundle = ModelBundle::create(arch, OptimizerConfig{}, 51);
  bundle.extractor.layers().front().weights().setIdentity();
  bundle.extractor.layers().front().bias().setZero();
  bundle.extractor.bump_version();
  set_constant_head(bundle.f1, {0.01, 0.01, 0.01, 0.97});
  set_constant_head(bundle.f2, {0.2, 0.1, 0.1, 0.6});

  Matrix target = Matrix::Ones(1, 4);
  PseudoLabelPolicy policy;
  policy.confidence_threshold = 0.95;
  Rng rng(1);
  const auto out = assign_pseudo_labels(bundle.extractor, bundle.f1, bundle.f2, target, 1, policy, rng);
  REQUIRE(out.size() == 1);
  CHECK(out[0].first == 0);
  CHECK(out[0].second == 3);
}

TEST_CASE("assign_pseudo_labels: disagreement yields no label") {
  auto arch = tiny_arch(4, 4);
  auto bundle = ModelBundle::create(arch, OptimizerConfig{}, 52);
  set_constant_head(bundle.f1, {0.01, 0.01, 0.01, 0.97});
  set_constant_head(bundle.f2, {0.99, 0.005, 0.0025, 0.0025});
  Matrix target = Matrix::Ones(1, 4);
  PseudoLabelPolicy policy;
  policy.confidence_threshold = 0.95;
  Rng rng(1);
  CHECK(assign_pseudo_labels(bundle.extractor, bundle.f1, bundle.f2, target, 1, policy, rng).empty());
}

TEST_CASE("assign_pseudo_labels: agreement without confidence yields no label") {
  auto arch = tiny_arch(4, 4);
  auto bundle = ModelBundle::create(arch, OptimizerConfig{}, 53);
  set_constant_head(bundle.f1, {0.1, 0.1, 0.7, 0.1});
  set_constant_head(bundle.f2, {0.05, 0.1, 0.8, 0.05});
  Matrix target = Matrix::Ones(1, 4);
  PseudoLabelPolicy policy;
  policy.confidence_threshold = 0.95;
  Rng rng(1);
  CHECK(assign_pseudo_labels(bundle.extractor, bundle.f1, bundle.f2, target, 1, policy, rng).empty());
}

TEST_CASE("train_butterfly: all checks off with zero quota reduces to joint training") {
  // Oracle: an independent loop over the same derived streams must produce
  // bit-identical parameters when checking, pseudo-labeling and the penalty
  // are all disabled.
  const int dim = 6, classes = 3, n = 64;
  auto arch = tiny_arch(dim, classes);
  arch.extractor_layers = 2;
  arch.head_layers = 2;
  OptimizerConfig optim;
  optim.learning_rate = 0.05;

  Dataset source;
  source.num_classes = classes;
  source.features.resize(n, dim);
  source.labels.resize(n);
  Rng data_rng(71);
  for (Eigen::Index i = 0; i < source.features.size(); ++i) {
    source.features.data()[i] = data_rng.normal();
  }
  for (int i = 0; i < n; ++i) source.labels[static_cast<std::size_t>(i)] = i % classes;
  const Matrix target = Matrix::Zero(10, dim);

  const std::uint64_t seed = 123;
  TrainConfig cfg;
  cfg.schedule = {0.4, 0.05, 2, 4};
  cfg.policy.confidence_threshold = 0.95;
  cfg.policy.n_init = 0;
  cfg.policy.n_t_max = 0;  // quota stays zero: Branch-II keeps the bootstrap set
  cfg.variant = {false, false, false, false};
  cfg.penalty = 0.0;
  cfg.steps_per_epoch = 5;
  cfg.batch_size = 16;

  auto bundle = ModelBundle::create(arch, optim, seed);
  train_butterfly(source, target, bundle, cfg, seed);

  // Independent replication: plain joint training on the noisy source.
  auto oracle = ModelBundle::create(arch, optim, seed);
  for (int epoch = 1; epoch <= cfg.schedule.total_epochs; ++epoch) {
    const auto order1 = Rng(derive_seed(seed, "b1-shuffle", static_cast<std::uint64_t>(epoch)))
                            .permutation(n);
    const auto order2 = Rng(derive_seed(seed, "b2-shuffle", static_cast<std::uint64_t>(epoch)))
                            .permutation(n);
    for (int step = 0; step < cfg.steps_per_epoch; ++step) {
      auto fetch = [&](const std::vector<int>& order) {
        BatchData b;
        b.features.resize(cfg.batch_size, dim);
        b.labels.resize(static_cast<std::size_t>(cfg.batch_size));
        for (int i = 0; i < cfg.batch_size; ++i) {
          const int idx = order[static_cast<std::size_t>((step * cfg.batch_size + i) % n)];
          b.features.row(i) = source.features.row(idx);
          b.labels[static_cast<std::size_t>(i)] = source.labels[static_cast<std::size_t>(idx)];
        }
        return b;
      };
      CheckingOptions opts;  // remember_rate 1.0: full batches
      checking_step(oracle.extractor, oracle.f1, oracle.f2, oracle.opt_extractor, oracle.opt_f1,
                    oracle.opt_f2, fetch(order1), opts, nullptr);
      checking_step(oracle.extractor, oracle.ft1, oracle.ft2, oracle.opt_extractor,
                    oracle.opt_ft1, oracle.opt_ft2, fetch(order2), opts, nullptr);
    }
  }
  CHECK((bundle.extractor.flat_params() - oracle.extractor.flat_params()).cwiseAbs().maxCoeff() ==
        0.0);
  CHECK((bundle.f1.flat_params() - oracle.f1.flat_params()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((bundle.f2.flat_params() - oracle.f2.flat_params()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((bundle.ft1.flat_params() - oracle.ft1.flat_params()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((bundle.ft2.flat_params() - oracle.ft2.flat_params()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("train_butterfly: numeric blowup saves the last good bundle and names it") {
  const int dim = 4, classes = 3;
  auto arch = tiny_arch(dim, classes);
  OptimizerConfig optim;
  optim.learning_rate = 1e150;  // guaranteed overflow within an epoch or two

  Dataset source;
  source.num_classes = classes;
  source.features = Matrix::Random(32, dim);
  source.labels.resize(32);
  for (int i = 0; i < 32; ++i) source.labels[static_cast<std::size_t>(i)] = i % classes;
  const Matrix target = Matrix::Random(8, dim);

  TrainConfig cfg;
  cfg.schedule = {0.2, 0.05, 2, 6};
  cfg.policy.n_init = 0;
  cfg.policy.n_t_max = 0;
  cfg.variant = ButterflyVariant::preset("no-check");
  cfg.steps_per_epoch = 4;
  cfg.batch_size = 8;
  const auto ckpt = std::filesystem::temp_directory_path() / "wudalab_last_good.ckpt";
  cfg.failure_checkpoint_path = ckpt.string();

  auto bundle = ModelBundle::create(arch, optim, 7);
  CHECK_THROWS_WITH_AS(train_butterfly(source, target, bundle, cfg, 7),
                       doctest::Contains("last good"), std::runtime_error);
  CHECK(std::filesystem::exists(ckpt));
  ModelBundle restored = ModelBundle::create(arch, optim, 7);
  load_bundle_checkpoint(ckpt.string(), restored);
  CHECK(restored.extractor.flat_params().allFinite());
  std::filesystem::remove(ckpt);
}

TEST_CASE("train_two_step: same seed twice gives identical models and relabels") {
  const auto pair = make_blob_pair(3, 4, 120, 60, 0.4, Vector(), 5);
  auto arch = tiny_arch(4, 3);
  OptimizerConfig optim;
  TrainConfig cfg;
  cfg.schedule = {0.2, 0.05, 2, 3};
  cfg.policy.n_init = 5;
  cfg.policy.n_t_max = 30;
  cfg.steps_per_epoch = 4;
  cfg.batch_size = 16;

  auto bundle_a = ModelBundle::create(arch, optim, 9);
  auto bundle_b = ModelBundle::create(arch, optim, 9);
  const auto out_a = train_two_step(pair.source, pair.target_features, bundle_a, arch, optim, cfg, 9);
  const auto out_b = train_two_step(pair.source, pair.target_features, bundle_b, arch, optim, cfg, 9);
  CHECK(out_a.relabeled_source == out_b.relabeled_source);
  CHECK((bundle_a.ft1.flat_params() - bundle_b.ft1.flat_params()).cwiseAbs().maxCoeff() == 0.0);
}
