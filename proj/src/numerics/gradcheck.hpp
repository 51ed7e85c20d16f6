// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <span>
#include <vector>

#include "numerics/tape.hpp"

namespace awdlm {

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  // Denominator floor for the relative error, so coordinates whose true
  // gradient is ~0 are judged on absolute error instead.
  double floor = 1e-6;
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  double max_absolute_error = 0.0;
  std::size_t worst_tensor = 0;
  std::size_t worst_index = 0;
  std::size_t coordinates = 0;
  // One entry per checked coordinate, tensors in the order given.
  std::vector<double> relative_errors;
  bool passed = false;
};

// Builds the scalar loss on a fresh tape. It must take its parameters from
// the tensors handed to check_gradient (through Tape::leaf).
template <typename T>
using LossBuilder = std::function<Var(Tape<T>&)>;

// Compares backward() against central differences
//   (f(x + h e_i) - f(x - h e_i)) / 2h
// for every coordinate of every tensor. relative error is
//   |analytic - numeric| / max(|analytic|, |numeric|, floor).
// Rejects f when two evaluations at the same point disagree.
template <typename T>
GradCheckReport check_gradient(std::span<Tensor<T>* const> parameters, const LossBuilder<T>& loss,
                               const GradCheckOptions& options = {});

}  // namespace awdlm
