#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace vens {

/// Deterministic pseudorandom stream built on mt19937-64 with portable
/// derivations for uniforms, Gaussians and bounded integers (the standard
/// library distributions are implementation-defined, so we roll our own).
///
/// All randomness in the toolkit flows through named forks of a master
/// seed. Independent concerns (weight init, dropout, data sampling, ...)
/// draw from independent streams, so changing how one concern consumes
/// randomness never shifts another.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }
  static constexpr const char* algorithm() { return "mt19937-64"; }

  std::uint64_t next_u64();

  /// Uniform double in [0, 1).
  double uniform();
  double uniform(double lo, double hi);

  /// Standard normal via Box-Muller (pairs cached).
  double gaussian();

  /// Uniform integer in [0, n), unbiased. n must be positive.
  int uniform_int(int n);
  std::size_t uniform_index(std::size_t n);

  /// Fisher-Yates shuffle using this stream.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[uniform_index(i)]);
    }
  }

  /// Derive an independent child stream from the parent seed and a label.
  Rng fork(std::string_view label) const;
  Rng fork(std::string_view label, std::uint64_t index) const;

 private:
  std::uint64_t bounded_u64(std::uint64_t n);

  std::uint64_t seed_;
  std::mt19937_64 engine_;
  double cached_gaussian_ = 0.0;
  bool has_cached_gaussian_ = false;
};

}  // namespace vens
