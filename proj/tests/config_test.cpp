#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "wudalab/config.hpp"

using namespace wudalab;

TEST_CASE("config: empty text resolves every key to its default") {
  const auto spec = parse_spec_text("");
  CHECK(spec.seed == 1);
  CHECK(spec.data.kind == "blobs");
  CHECK(spec.data.classes == 4);
  CHECK(spec.data.dim == 10);
  CHECK(spec.noise.kind == "symmetry");
  CHECK(spec.noise.rho == doctest::Approx(0.2));
  CHECK(spec.schedule.tau == doctest::Approx(0.4));
  CHECK(spec.schedule.tau_t == doctest::Approx(0.05));
  CHECK(spec.schedule.warmup_epochs == 5);
  CHECK(spec.schedule.total_epochs == 30);
  CHECK(spec.steps_per_epoch == 50);
  CHECK(spec.batch_size == 128);
  CHECK(spec.penalty == doctest::Approx(0.01));
  CHECK(spec.confidence == doctest::Approx(0.95));
  CHECK(spec.n_t_max == 15000);
  CHECK(spec.variant == "bnet");
  CHECK(spec.optim.kind == Optimizer::Kind::kMomentumSgd);
  CHECK(spec.optim.learning_rate == doctest::Approx(0.01));
  CHECK(spec.optim.momentum == doctest::Approx(0.9));
  CHECK_FALSE(spec.n_init.has_value());
}

TEST_CASE("config: values, comments and whitespace parse") {
  const auto spec = parse_spec_text(
      "# a comment\n"
      "seed = 42\n"
      "noise.kind = pair   # trailing comment\n"
      "noise.rho = 0.45\n"
      "butterfly.variant = bnet-m\n"
      "butterfly.t_max = 12\n"
      "data.translation = 0.5, -1.5\n"
      "optim.kind = adagrad\n");
  CHECK(spec.seed == 42);
  CHECK(spec.noise.kind == "pair");
  CHECK(spec.noise.rho == doctest::Approx(0.45));
  CHECK(spec.variant == "bnet-m");
  CHECK(spec.schedule.total_epochs == 12);
  REQUIRE(spec.data.translation.size() == 2);
  CHECK(spec.data.translation[1] == doctest::Approx(-1.5));
  CHECK(spec.optim.kind == Optimizer::Kind::kAdagrad);
}

TEST_CASE("config: unknown key is rejected by name") {
  CHECK_THROWS_WITH_AS(parse_spec_text("buterfly.tau = 0.4\n"),
                       doctest::Contains("buterfly.tau"), std::invalid_argument);
}

TEST_CASE("config: duplicate keys are rejected") {
  CHECK_THROWS_WITH_AS(parse_spec_text("seed = 1\nseed = 2\n"), doctest::Contains("duplicate"),
                       std::invalid_argument);
}

TEST_CASE("config: malformed lines are rejected with their number") {
  CHECK_THROWS_WITH_AS(parse_spec_text("seed = 1\nnot a key value\n"), doctest::Contains("line 2"),
                       std::invalid_argument);
}

TEST_CASE("config: type errors name the key") {
  CHECK_THROWS_WITH_AS(parse_spec_text("butterfly.t_max = soon\n"),
                       doctest::Contains("butterfly.t_max"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_spec_text("model.batchnorm = maybe\n"),
                       doctest::Contains("model.batchnorm"), std::invalid_argument);
}

#ifdef WUDALAB_CONFIG_DIR
TEST_CASE("config: the shipped example configs parse") {
  CHECK_NOTHROW(parse_spec_file(std::string(WUDALAB_CONFIG_DIR) + "/blobs.conf"));
  CHECK_NOTHROW(parse_spec_file(std::string(WUDALAB_CONFIG_DIR) + "/blobs_pair45.conf"));
  CHECK_NOTHROW(parse_spec_file(std::string(WUDALAB_CONFIG_DIR) + "/mnist_rotated.conf"));
}
#endif

TEST_CASE("config: semantic validation") {
  CHECK_THROWS_AS(parse_spec_text("noise.kind = gaussian\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_spec_text("noise.kind = pair\nnoise.rho = 0.5\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_spec_text("butterfly.t_max = 3\nbutterfly.t_k = 5\n"),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_spec_text("butterfly.variant = nonesuch\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_spec_text("butterfly.batch = 1\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_spec_text("butterfly.confidence = 0.4\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_spec_text("data.kind = idx\n"), std::invalid_argument);  // missing paths
  CHECK_NOTHROW(parse_spec_text("butterfly.variant = two-step\n"));
}
