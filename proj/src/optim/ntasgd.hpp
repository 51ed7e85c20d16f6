// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "numerics/tensor.hpp"

namespace awdlm {

// Non-monotonically triggered averaging bookkeeping.
//
//   k          SGD steps taken
//   t          validation checks logged (== logs.size())
//   trigger    step at which averaging started (meaningful when triggered)
//   iterate_sum, avg_count
//              once triggered: sum of w_trigger .. w_k and k - trigger + 1
//
// The running sum is kept in double regardless of the parameter type.
struct TrainerState {
  std::size_t k = 0;
  std::size_t t = 0;
  std::size_t trigger = 0;
  bool triggered = false;
  std::vector<double> logs;
  std::vector<std::vector<double>> iterate_sum;
  std::size_t avg_count = 0;

  bool operator==(const TrainerState&) const = default;
};

// The trigger condition: at least n+1 values logged and v worse than the
// best of the last n+1 of them.
bool nonmonotone_condition(std::span<const double> logs, double v, std::size_t n);

// Validation-boundary update while untriggered. Evaluates the condition
// against the existing log, then appends v. On a trigger the current
// iterate w_k becomes the first term of the average. Returns whether it
// triggered.
template <typename T>
bool nt_asgd_check(TrainerState& state, double v, std::size_t n, std::span<const Tensor<T>* const> params);

// Starts averaging at the current step (T = k) regardless of the log.
template <typename T>
void force_trigger(TrainerState& state, std::span<const Tensor<T>* const> params);

// iterate_sum += w; avg_count += 1. Rejected before the trigger.
template <typename T>
void accumulate_average(TrainerState& state, std::span<const Tensor<T>* const> params);

// To be called after every SGD step: k += 1, then accumulate if triggered.
template <typename T>
void record_step(TrainerState& state, std::span<const Tensor<T>* const> params);

template <typename T>
struct AveragedIterate {
  std::vector<Tensor<T>> tensors;
  // True when nothing was averaged and the last iterate was returned.
  bool fell_back = false;
};

// iterate_sum / avg_count, or a copy of the current parameters when
// averaging never started. The parameters themselves are not touched.
template <typename T>
AveragedIterate<T> finalize(const TrainerState& state, std::span<const Tensor<T>* const> params);

}  // namespace awdlm
