// SPDX-License-Identifier: Apache-2.0
#include "numerics/rng.hpp"

#include <cmath>
#include <numbers>

namespace awdlm {

double Rng::normal(double mean, double stddev) noexcept {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  return mean + stddev * radius * std::cos(2.0 * std::numbers::pi * u2);
}

template <typename T>
Tensor<T> sample_bernoulli_mask(Rng& rng, const Shape& shape, double keep_prob) {
  AWDLM_REQUIRE(keep_prob > 0.0 && keep_prob <= 1.0,
          "keep probability must be in (0, 1], got " + std::to_string(keep_prob));
  Tensor<T> mask(shape, T(1));
  if (keep_prob == 1.0) return mask;
  const T scale = static_cast<T>(1.0 / keep_prob);
  for (T& v : mask.data()) v = rng.uniform() < keep_prob ? scale : T(0);
  return mask;
}

template Tensor<float> sample_bernoulli_mask<float>(Rng&, const Shape&, double);
template Tensor<double> sample_bernoulli_mask<double>(Rng&, const Shape&, double);

}  // namespace awdlm
