// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>

#include "numerics/tensor.hpp"

namespace awdlm {

// L2 norm of all gradients taken together.
template <typename T>
double global_grad_norm(std::span<Tensor<T>* const> params);

// Rescales every gradient by max_norm / g when the global norm g exceeds
// max_norm. Returns g (before clipping).
template <typename T>
double clip_global_norm(std::span<Tensor<T>* const> params, double max_norm);

// w <- w - lr * (grad + weight_decay * w), then grads are zeroed. The decay
// term bypasses clipping.
template <typename T>
void sgd_step(std::span<Tensor<T>* const> params, double lr, double weight_decay = 0.0);

}  // namespace awdlm
