#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support/chi_square.hpp"

#include "wudalab/noise.hpp"

#include <cmath>

using namespace wudalab;

namespace {

Dataset uniform_label_dataset(int n, int num_classes, std::uint64_t seed) {
  Dataset d;
  d.num_classes = num_classes;
  d.features = Matrix::Zero(n, 2);
  d.labels.resize(static_cast<std::size_t>(n));
  Rng rng(seed);
  for (int i = 0; i < n; ++i) {
    d.labels[static_cast<std::size_t>(i)] = static_cast<int>(rng.below(num_classes));
  }
  return d;
}

double flip_fraction(const NoisyDataset& noisy) {
  long flips = 0;
  for (const bool f : noisy.truth.corrupted) flips += f ? 1 : 0;
  return static_cast<double>(flips) / static_cast<double>(noisy.truth.corrupted.size());
}

}  // namespace

TEST_CASE("symmetry_matrix: K=11 rho=0.4 puts 0.04 on every off-diagonal") {
  const auto tm = symmetry_matrix(11, 0.4);
  for (int i = 0; i < 11; ++i) {
    for (int j = 0; j < 11; ++j) {
      if (i == j) CHECK(tm.q(i, j) == doctest::Approx(0.6).epsilon(1e-12));
      else CHECK(tm.q(i, j) == doctest::Approx(0.04).epsilon(1e-12));
    }
  }
}

TEST_CASE("symmetry_matrix: rho=0 is the identity") {
  const auto tm = symmetry_matrix(5, 0.0);
  CHECK((tm.q - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("symmetry_matrix: K=10 rho=0.2 rows are stochastic") {
  const auto tm = symmetry_matrix(10, 0.2);
  CHECK(tm.q(0, 0) == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(tm.q(0, 1) == doctest::Approx(0.2 / 9.0).epsilon(1e-12));
  for (int i = 0; i < 10; ++i) CHECK(tm.q.row(i).sum() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("symmetry_matrix: rejects K < 2") {
  CHECK_THROWS_AS(symmetry_matrix(1, 0.2), std::invalid_argument);
}

TEST_CASE("pair_matrix: rho=0.4 flips 0 to 1 with probability 0.4") {
  const auto tm = pair_matrix(10, 0.4);
  CHECK(tm.q(0, 1) == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(tm.q(0, 0) == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(tm.q(9, 0) == doctest::Approx(0.4).epsilon(1e-12));  // wraps around
}

TEST_CASE("pair_matrix: rho=0 is the identity") {
  const auto tm = pair_matrix(4, 0.0);
  CHECK((tm.q - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("pair_matrix: K=3 rho=0.45 gives the expected rows") {
  const auto tm = pair_matrix(3, 0.45);
  Matrix expected(3, 3);
  expected << 0.55, 0.45, 0.0, 0.0, 0.55, 0.45, 0.45, 0.0, 0.55;
  CHECK((tm.q - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("pair_matrix: rho >= 0.5 rejected with reason") {
  CHECK_THROWS_WITH_AS(pair_matrix(10, 0.5), doctest::Contains("0.5"), std::invalid_argument);
}

TEST_CASE("diagonal dominance holds on the documented ranges") {
  CHECK(symmetry_matrix(10, 0.45).diagonally_dominant());
  CHECK(symmetry_matrix(4, 0.74).diagonally_dominant());   // rho < (K-1)/K = 0.75
  CHECK(!symmetry_matrix(4, 0.76).diagonally_dominant());
  CHECK(pair_matrix(10, 0.45).diagonally_dominant());
  CHECK(pair_matrix(10, 0.49).diagonally_dominant());
}

TEST_CASE("corrupt: identity kernel changes nothing") {
  const auto clean = uniform_label_dataset(500, 10, 3);
  Rng rng(4);
  const auto noisy = corrupt(clean, symmetry_matrix(10, 0.0), rng);
  CHECK(noisy.data.labels == clean.labels);
  CHECK(flip_fraction(noisy) == 0.0);
}

TEST_CASE("corrupt: symmetry flip fraction concentrates at rho") {
  const int n = 50000;
  const double rho = 0.2;
  const auto clean = uniform_label_dataset(n, 10, 5);
  Rng rng(6);
  const auto noisy = corrupt(clean, symmetry_matrix(10, rho), rng);
  const double tol = 3.0 * std::sqrt(rho * (1.0 - rho) / n);
  CHECK(std::abs(flip_fraction(noisy) - rho) < tol);
}

TEST_CASE("corrupt: fixed seed reproduces bit-identical labels") {
  const auto clean = uniform_label_dataset(2000, 10, 7);
  const auto tm = symmetry_matrix(10, 0.45);
  Rng rng_a(8), rng_b(8);
  const auto a = corrupt(clean, tm, rng_a);
  const auto b = corrupt(clean, tm, rng_b);
  CHECK(a.data.labels == b.data.labels);
}

TEST_CASE("corrupt: per-class observed distribution passes a chi-square test") {
  const int n = 100000;
  const int k = 10;
  const auto clean = uniform_label_dataset(n, k, 11);
  const auto tm = symmetry_matrix(k, 0.45);
  Rng rng(12);
  const auto noisy = corrupt(clean, tm, rng);

  std::vector<std::vector<long>> counts(k, std::vector<long>(k, 0));
  std::vector<long> totals(k, 0);
  for (std::size_t i = 0; i < noisy.data.labels.size(); ++i) {
    counts[static_cast<std::size_t>(noisy.truth.clean_labels[i])]
          [static_cast<std::size_t>(noisy.data.labels[i])]++;
    totals[static_cast<std::size_t>(noisy.truth.clean_labels[i])]++;
  }
  for (int i = 0; i < k; ++i) {
    double stat = 0.0;
    int df = -1;
    for (int j = 0; j < k; ++j) {
      const double expected = tm.q(i, j) * totals[static_cast<std::size_t>(i)];
      if (expected <= 0.0) continue;
      const double diff = counts[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] -
                          expected;
      stat += diff * diff / expected;
      ++df;
    }
    CHECK(testing::chi_square_p_value(stat, df) > 0.01);
  }
}

TEST_CASE("corrupt_by_mixture: rho=0 leaves the dataset unchanged") {
  const auto clean = uniform_label_dataset(300, 4, 13);
  Rng rng(14);
  const auto noisy = corrupt_by_mixture(
      clean, 0.0, [](const VectorRef&, int y) { return (y + 1) % 4; }, rng);
  CHECK(noisy.data.labels == clean.labels);
}

TEST_CASE("corrupt_by_mixture: rho=1 flips every flag") {
  const auto clean = uniform_label_dataset(300, 4, 15);
  Rng rng(16);
  const auto noisy = corrupt_by_mixture(
      clean, 1.0, [](const VectorRef&, int y) { return (y + 1) % 4; }, rng);
  CHECK(flip_fraction(noisy) == 1.0);
  for (std::size_t i = 0; i < noisy.data.labels.size(); ++i) {
    CHECK(noisy.data.labels[i] == (clean.labels[i] + 1) % 4);
  }
}

TEST_CASE("corrupt_by_mixture: corrupted fraction concentrates at rho") {
  const int n = 20000;
  const double rho = 0.45;
  const auto clean = uniform_label_dataset(n, 10, 17);
  Rng rng(18);
  const auto noisy = corrupt_by_mixture(
      clean, rho, [](const VectorRef&, int y) { return (y + 3) % 10; }, rng);
  const double tol = 3.0 * std::sqrt(rho * (1.0 - rho) / n);
  CHECK(std::abs(flip_fraction(noisy) - rho) < tol);
}

TEST_CASE("corrupt_by_mixture: labeler returning the clean label is rejected") {
  const auto clean = uniform_label_dataset(100, 4, 19);
  Rng rng(20);
  CHECK_THROWS_WITH_AS(
      corrupt_by_mixture(clean, 1.0, [](const VectorRef&, int y) { return y; }, rng),
      doctest::Contains("clean label"), std::runtime_error);
}

TEST_CASE("empirical_transition: identity corruption recovers the identity") {
  const auto clean = uniform_label_dataset(5000, 6, 21);
  Rng rng(22);
  const auto noisy = corrupt(clean, symmetry_matrix(6, 0.0), rng);
  const auto emp = empirical_transition(noisy, 6);
  for (const bool defined : emp.row_defined) CHECK(defined);
  CHECK((emp.q - Matrix::Identity(6, 6)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("empirical_transition: symmetry(10, 0.45) within 0.02 at n=100000") {
  const auto clean = uniform_label_dataset(100000, 10, 23);
  const auto tm = symmetry_matrix(10, 0.45);
  Rng rng(24);
  const auto emp = empirical_transition(corrupt(clean, tm, rng), 10);
  CHECK((emp.q - tm.q).cwiseAbs().maxCoeff() < 0.02);
  for (int i = 0; i < 10; ++i) CHECK(emp.q.row(i).sum() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("empirical_transition: pair(10, 0.2) is zero off the two active bands") {
  const auto clean = uniform_label_dataset(100000, 10, 25);
  const auto tm = pair_matrix(10, 0.2);
  Rng rng(26);
  const auto emp = empirical_transition(corrupt(clean, tm, rng), 10);
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j) {
      if (j == i || j == (i + 1) % 10) continue;
      CHECK(emp.q(i, j) < 0.005);
    }
  }
}

TEST_CASE("empirical_transition: unpopulated class rows are flagged") {
  Dataset clean = uniform_label_dataset(50, 3, 27);
  clean.num_classes = 4;  // class 3 never appears
  Rng rng(28);
  const auto emp = empirical_transition(corrupt(clean, symmetry_matrix(4, 0.2), rng), 4);
  CHECK(emp.row_defined[0]);
  CHECK_FALSE(emp.row_defined[3]);
  CHECK(emp.q.row(3).sum() == 0.0);
}
