#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace wudalab {

// xoshiro256++ seeded through splitmix64. Self-contained so that identical
// seeds give identical streams on every platform and standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // Uniform in [0, 1), 53-bit resolution.
  double uniform();
  double uniform(double lo, double hi);

  // Standard normal via Box-Muller; generates pairs, caches the spare.
  double normal();

  // Uniform integer in [0, n), unbiased by rejection. n must be > 0.
  std::uint64_t below(std::uint64_t n);

  // Fisher-Yates over indices 0..n-1.
  std::vector<int> permutation(int n);

  // Draw from a discrete distribution given by `probs` (need not be exactly
  // normalized; the tail bucket absorbs rounding).
  int categorical(const double* probs, int k);

 private:
  std::uint64_t state_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Stable seed derivation: one base seed fans out into named substreams so
// that adding a stream never perturbs the others.
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t index = 0);

}  // namespace wudalab
