#pragma once

#include <cstdint>
#include <string_view>

namespace hiernav {

std::uint64_t splitmix64(std::uint64_t x);

/// FNV-1a over bytes, folded with a seed.
std::uint64_t hash_combine(std::uint64_t seed, std::string_view bytes);
std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value);

/// Counter-based generator: the i-th draw is a pure function of (key, i).
/// Distributions are implemented here so results do not depend on the
/// standard library's unspecified distribution algorithms.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}

  std::uint64_t next_u64();
  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  /// Standard normal (Box-Muller, both halves used).
  double normal();
  bool bernoulli(double p) { return uniform() < p; }

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace hiernav
