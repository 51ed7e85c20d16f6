// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include "numerics/tensor.hpp"

namespace awdlm {

// Counter-based splitmix64 stream. The whole state is (seed, counter), so a
// checkpoint can restore it exactly and the counter doubles as a draw count.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0, std::uint64_t counter = 0)
      : seed_(seed), counter_(counter) {}

  std::uint64_t next_u64() noexcept {
    std::uint64_t z = seed_ + (++counter_) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  // Box-Muller; consumes two draws and caches nothing.
  double normal(double mean, double stddev) noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_;
};

// Inverted-dropout mask: each entry is 1/keep_prob with probability
// keep_prob, otherwise 0.
template <typename T>
Tensor<T> sample_bernoulli_mask(Rng& rng, const Shape& shape, double keep_prob);

}  // namespace awdlm
