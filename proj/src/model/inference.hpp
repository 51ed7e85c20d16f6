// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "model/parameters.hpp"

namespace awdlm {

// Per-token results of a dropout-free pass over a token stream.
struct TokenTrace {
  std::vector<int> targets;
  std::vector<double> losses;  // -ln p(target), natural log
  // Final-layer output that produced each prediction, row per token
  // (tokens x e). Filled only when requested.
  std::vector<float> hidden;
  std::size_t hidden_width = 0;

  double mean_loss() const;
  double perplexity() const;
};

// Batchifies `ids` into `batch` streams and scores fixed-length windows of
// `bptt`, carrying the hidden state between windows. Tokens are reported in
// processing order (window by window, time-major). keep_hidden requires
// batch == 1 so the order matches the source.
template <typename T>
TokenTrace score_tokens(const LMParameters<T>& params, std::span<const int> ids, std::size_t batch,
                        std::size_t bptt, bool keep_hidden = false);

// exp(mean cross-entropy) with all dropout disabled.
template <typename T>
double evaluate_perplexity(const LMParameters<T>& params, std::span<const int> ids, std::size_t batch,
                           std::size_t bptt);

}  // namespace awdlm
