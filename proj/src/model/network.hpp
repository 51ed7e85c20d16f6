// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <span>
#include <vector>

#include "model/masks.hpp"
#include "model/parameters.hpp"
#include "numerics/tape.hpp"

namespace awdlm {

struct BoundLayer {
  Var w_input;
  Var w_hidden;
  Var bias;
};

// Parameters registered on one tape.
struct BoundParameters {
  ModelShape shape;
  Var embedding;
  std::vector<BoundLayer> layers;
  Var decoder_bias;
};

// Trainable binding: gradients reach params' grad buffers.
template <typename T>
BoundParameters bind_parameters(Tape<T>& tape, LMParameters<T>& params);
// Read-only binding for evaluation.
template <typename T>
BoundParameters bind_parameters(Tape<T>& tape, const LMParameters<T>& params);

// Per-layer (h, c), each B x output_width(layer). Values only: the state
// carried between windows is cut from the graph.
template <typename T>
struct HiddenState {
  std::vector<Tensor<T>> h;
  std::vector<Tensor<T>> c;

  std::size_t batch() const { return h.empty() ? 0 : h.front().rows(); }
};

template <typename T>
HiddenState<T> initial_state(const ModelShape& shape, std::size_t batch);

struct CellOutput {
  Var h;
  Var c;
};

// Gate nonlinearities on a precomputed (B x 4*out) preactivation:
//   i, f, o = sigmoid(.), g = tanh(.), c = i*g + f*c_prev, h = o*tanh(c)
template <typename T>
CellOutput lstm_gates(Tape<T>& tape, Var preactivation, Var c_prev);

// Full cell: preactivation = x W + h_prev U + b.
template <typename T>
CellOutput lstm_cell(Tape<T>& tape, Var x, Var h_prev, Var c_prev, Var w_input, Var w_hidden, Var bias);

// Embedding lookup with word-level dropout; row_mask may be empty.
template <typename T>
Var embed(Tape<T>& tape, Var table, std::span<const int> ids, std::span<const T> row_mask);

template <typename T>
struct ForwardResult {
  std::size_t batch = 0;
  std::size_t length = 0;
  Var logits;          // (length*B) x V, time-major rows
  Var raw_output;      // final-layer h_t, (length*B) x e
  Var dropped_output;  // output mask applied to raw_output
  HiddenState<T> state;
};

// One pass over a time-major window of ids. masks == nullptr disables every
// form of dropout (evaluation).
template <typename T>
ForwardResult<T> forward(Tape<T>& tape, const BoundParameters& params, const MaskSet<T>* masks,
                         std::span<const int> inputs, std::size_t batch, const HiddenState<T>& state);

struct LossTerms {
  Var total;
  Var cross_entropy;
  std::optional<Var> activation;  // alpha * mean_t ||m * h_t||
  std::optional<Var> temporal;    // beta * mean_t ||h_t - h_{t+1}||
};

// Cross-entropy averaged over all B*len targets plus AR on the dropped final
// output and TAR on the raw final output. Norms are per example, averaged
// over examples and timesteps.
template <typename T>
LossTerms language_model_loss(Tape<T>& tape, const ForwardResult<T>& fwd, std::span<const int> targets,
                              double alpha, double beta);

}  // namespace awdlm
