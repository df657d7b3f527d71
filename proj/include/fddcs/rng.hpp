#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "fddcs/numerics.hpp"

namespace fddcs {

/// Seedable, splittable random stream.
///
/// Wraps std::mt19937_64 (whose output sequence is fixed by the standard) and
/// derives every variate itself, so a given seed produces the same numbers
/// with any standard library. Child streams are keyed by SplitMix64 mixing of
/// the parent seed and a caller-chosen key.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  /// Independent stream identified by `key`; does not advance this stream.
  Rng split(std::uint64_t key) const;

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform integer on [0, n).
  std::size_t index(std::size_t n);
  bool bernoulli(double p) { return uniform() < p; }
  /// Circular complex Gaussian CN(0, variance); consumes one Box-Muller pair
  /// (real part first, imaginary second).
  Complex complex_normal(double variance = 1.0);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

/// k distinct values drawn uniformly from {0..n-1}, returned ascending.
std::vector<int> sample_without_replacement(int n, int k, Rng& rng);

}  // namespace fddcs
