// SPDX-License-Identifier: Apache-2.0
#include "model/inference.hpp"

#include <algorithm>
#include <cmath>

#include "corpus/batching.hpp"
#include "model/network.hpp"

namespace awdlm {

double TokenTrace::mean_loss() const {
  AWDLM_REQUIRE(!losses.empty(), "token trace is empty");
  double total = 0.0;
  for (double l : losses) total += l;
  return total / static_cast<double>(losses.size());
}

double TokenTrace::perplexity() const { return std::exp(mean_loss()); }

template <typename T>
TokenTrace score_tokens(const LMParameters<T>& params, std::span<const int> ids, std::size_t batch,
                        std::size_t bptt, bool keep_hidden) {
  AWDLM_REQUIRE(bptt > 0, "evaluation window length must be positive");
  AWDLM_REQUIRE(!keep_hidden || batch == 1, "hidden-state traces need batch size 1");
  const std::size_t vocab = params.shape.vocab;
  for (int id : ids)
    AWDLM_REQUIRE(id >= 0 && static_cast<std::size_t>(id) < vocab,
                  "vocabulary mismatch: token id " + std::to_string(id) + " but the model has " +
                      std::to_string(vocab) + " words");

  const BatchedCorpus corpus = batchify(ids, batch);
  TokenTrace trace;
  trace.hidden_width = keep_hidden ? params.shape.embed : 0;
  HiddenState<T> state = initial_state<T>(params.shape, batch);

  for (std::size_t cursor = 0;;) {
    auto window = next_window(corpus, cursor, bptt);
    if (!window) break;
    Tape<T> tape(false);
    const BoundParameters bound = bind_parameters(tape, params);
    ForwardResult<T> fwd = forward<T>(tape, bound, nullptr, window->inputs, batch, state);
    const Tensor<T>& logits = tape.value(fwd.logits);
    for (std::size_t r = 0; r < logits.rows(); ++r) {
      const T* row = logits.data().data() + r * vocab;
      const double peak = static_cast<double>(*std::max_element(row, row + vocab));
      double z = 0.0;
      for (std::size_t c = 0; c < vocab; ++c) z += std::exp(static_cast<double>(row[c]) - peak);
      const int target = window->targets[r];
      trace.targets.push_back(target);
      trace.losses.push_back(std::log(z) + peak - static_cast<double>(row[static_cast<std::size_t>(target)]));
    }
    if (keep_hidden) {
      auto h = tape.value(fwd.raw_output).data();
      for (T v : h) trace.hidden.push_back(static_cast<float>(v));
    }
    state = std::move(fwd.state);
    cursor = window->next_cursor;
  }
  return trace;
}

template <typename T>
double evaluate_perplexity(const LMParameters<T>& params, std::span<const int> ids, std::size_t batch,
                           std::size_t bptt) {
  return score_tokens(params, ids, batch, bptt, false).perplexity();
}

template TokenTrace score_tokens<float>(const LMParameters<float>&, std::span<const int>, std::size_t,
                                        std::size_t, bool);
template TokenTrace score_tokens<double>(const LMParameters<double>&, std::span<const int>, std::size_t,
                                         std::size_t, bool);
template double evaluate_perplexity<float>(const LMParameters<float>&, std::span<const int>, std::size_t,
                                           std::size_t);
template double evaluate_perplexity<double>(const LMParameters<double>&, std::span<const int>, std::size_t,
                                            std::size_t);

}  // namespace awdlm
