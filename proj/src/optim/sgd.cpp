// SPDX-License-Identifier: Apache-2.0
#include "optim/sgd.hpp"

#include <cmath>

namespace awdlm {

template <typename T>
double global_grad_norm(std::span<Tensor<T>* const> params) {
  double sq = 0.0;
  for (const Tensor<T>* p : params)
    for (T g : p->grad()) sq += static_cast<double>(g) * static_cast<double>(g);
  return std::sqrt(sq);
}

template <typename T>
double clip_global_norm(std::span<Tensor<T>* const> params, double max_norm) {
  AWDLM_REQUIRE(max_norm > 0.0, "clip_global_norm: max_norm must be positive");
  const double norm = global_grad_norm(params);
  if (norm > max_norm) {
    const T factor = static_cast<T>(max_norm / norm);
    for (Tensor<T>* p : params)
      for (T& g : p->grad()) g *= factor;
  }
  return norm;
}

template <typename T>
void sgd_step(std::span<Tensor<T>* const> params, double lr, double weight_decay) {
  const T rate = static_cast<T>(lr);
  const T decay = static_cast<T>(weight_decay);
  for (Tensor<T>* p : params) {
    auto w = p->data();
    auto g = p->grad();
    AWDLM_REQUIRE(g.size() == w.size(), "sgd_step: parameter of shape " + to_string(p->shape()) +
                                            " has no gradient buffer");
    if (decay != T(0)) {
      for (std::size_t i = 0; i < w.size(); ++i) w[i] -= rate * (g[i] + decay * w[i]);
    } else {
      for (std::size_t i = 0; i < w.size(); ++i) w[i] -= rate * g[i];
    }
    p->zero_grad();
  }
}

template double global_grad_norm<float>(std::span<Tensor<float>* const>);
template double global_grad_norm<double>(std::span<Tensor<double>* const>);
template double clip_global_norm<float>(std::span<Tensor<float>* const>, double);
template double clip_global_norm<double>(std::span<Tensor<double>* const>, double);
template void sgd_step<float>(std::span<Tensor<float>* const>, double, double);
template void sgd_step<double>(std::span<Tensor<double>* const>, double, double);

}  // namespace awdlm
