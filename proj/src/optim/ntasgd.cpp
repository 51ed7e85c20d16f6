// SPDX-License-Identifier: Apache-2.0
#include "optim/ntasgd.hpp"

#include <algorithm>

namespace awdlm {

bool nonmonotone_condition(std::span<const double> logs, double v, std::size_t n) {
  const std::size_t t = logs.size();
  if (t <= n) return false;
  const double best = *std::min_element(logs.end() - static_cast<std::ptrdiff_t>(n + 1), logs.end());
  return v > best;
}

template <typename T>
bool nt_asgd_check(TrainerState& state, double v, std::size_t n, std::span<const Tensor<T>* const> params) {
  if (state.triggered) fail(ErrorCode::state, "nt_asgd_check: averaging already triggered");
  const bool fire = nonmonotone_condition(state.logs, v, n);
  if (fire) force_trigger(state, params);
  state.logs.push_back(v);
  state.t += 1;
  return fire;
}

template <typename T>
void force_trigger(TrainerState& state, std::span<const Tensor<T>* const> params) {
  if (state.triggered) fail(ErrorCode::state, "averaging already triggered at step " + std::to_string(state.trigger));
  state.triggered = true;
  state.trigger = state.k;
  state.iterate_sum.clear();
  for (const Tensor<T>* p : params) state.iterate_sum.emplace_back(p->size(), 0.0);
  state.avg_count = 0;
  accumulate_average(state, params);
}

template <typename T>
void accumulate_average(TrainerState& state, std::span<const Tensor<T>* const> params) {
  if (!state.triggered) fail(ErrorCode::state, "accumulate_average: averaging has not been triggered");
  AWDLM_REQUIRE(params.size() == state.iterate_sum.size(), "accumulate_average: parameter count changed");
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto w = params[i]->data();
    auto& sum = state.iterate_sum[i];
    AWDLM_REQUIRE(sum.size() == w.size(), "accumulate_average: parameter " + std::to_string(i) + " changed size");
    for (std::size_t j = 0; j < w.size(); ++j) sum[j] += static_cast<double>(w[j]);
  }
  state.avg_count += 1;
}

template <typename T>
void record_step(TrainerState& state, std::span<const Tensor<T>* const> params) {
  state.k += 1;
  if (state.triggered) accumulate_average(state, params);
}

template <typename T>
AveragedIterate<T> finalize(const TrainerState& state, std::span<const Tensor<T>* const> params) {
  AveragedIterate<T> out;
  if (!state.triggered || state.avg_count == 0) {
    out.fell_back = true;
    for (const Tensor<T>* p : params) out.tensors.emplace_back(p->shape(), std::vector<T>(p->data().begin(), p->data().end()));
    return out;
  }
  AWDLM_REQUIRE(params.size() == state.iterate_sum.size(), "finalize: parameter count changed");
  const double count = static_cast<double>(state.avg_count);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor<T> avg(params[i]->shape());
    auto d = avg.data();
    for (std::size_t j = 0; j < d.size(); ++j) d[j] = static_cast<T>(state.iterate_sum[i][j] / count);
    out.tensors.push_back(std::move(avg));
  }
  return out;
}

#define AWDLM_INSTANTIATE_NTASGD(T)                                                                      \
  template bool nt_asgd_check<T>(TrainerState&, double, std::size_t, std::span<const Tensor<T>* const>); \
  template void force_trigger<T>(TrainerState&, std::span<const Tensor<T>* const>);                      \
  template void accumulate_average<T>(TrainerState&, std::span<const Tensor<T>* const>);                 \
  template void record_step<T>(TrainerState&, std::span<const Tensor<T>* const>);                        \
  template AveragedIterate<T> finalize<T>(const TrainerState&, std::span<const Tensor<T>* const>);

AWDLM_INSTANTIATE_NTASGD(float)
AWDLM_INSTANTIATE_NTASGD(double)

}  // namespace awdlm
