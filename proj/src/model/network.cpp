// SPDX-License-Identifier: Apache-2.0
#include "model/network.hpp"

namespace awdlm {

template <typename T>
BoundParameters bind_parameters(Tape<T>& tape, LMParameters<T>& params) {
  BoundParameters b;
  b.shape = params.shape;
  b.embedding = tape.leaf(params.embedding);
  for (auto& l : params.layers)
    b.layers.push_back({tape.leaf(l.w_input), tape.leaf(l.w_hidden), tape.leaf(l.bias)});
  b.decoder_bias = tape.leaf(params.decoder_bias);
  return b;
}

template <typename T>
BoundParameters bind_parameters(Tape<T>& tape, const LMParameters<T>& params) {
  BoundParameters b;
  b.shape = params.shape;
  b.embedding = tape.view(params.embedding);
  for (const auto& l : params.layers)
    b.layers.push_back({tape.view(l.w_input), tape.view(l.w_hidden), tape.view(l.bias)});
  b.decoder_bias = tape.view(params.decoder_bias);
  return b;
}

template <typename T>
HiddenState<T> initial_state(const ModelShape& shape, std::size_t batch) {
  HiddenState<T> s;
  for (std::size_t l = 0; l < shape.layers; ++l) {
    s.h.push_back(Tensor<T>::matrix(batch, shape.output_width(l)));
    s.c.push_back(Tensor<T>::matrix(batch, shape.output_width(l)));
  }
  return s;
}

template <typename T>
CellOutput lstm_gates(Tape<T>& tape, Var preactivation, Var c_prev) {
  const std::size_t width = tape.value(preactivation).cols() / 4;
  AWDLM_REQUIRE(width > 0 && tape.value(preactivation).cols() == 4 * width,
                "lstm: preactivation width must be a multiple of 4, got shape " +
                    to_string(tape.value(preactivation).shape()));
  const Var i = tape.sigmoid(tape.slice_cols(preactivation, 0, width));
  const Var f = tape.sigmoid(tape.slice_cols(preactivation, width, width));
  const Var o = tape.sigmoid(tape.slice_cols(preactivation, 2 * width, width));
  const Var g = tape.tanh(tape.slice_cols(preactivation, 3 * width, width));
  const Var c = tape.add(tape.mul(i, g), tape.mul(f, c_prev));
  const Var h = tape.mul(o, tape.tanh(c));
  return {h, c};
}

template <typename T>
CellOutput lstm_cell(Tape<T>& tape, Var x, Var h_prev, Var c_prev, Var w_input, Var w_hidden, Var bias) {
  const Var pre = tape.add(tape.add_bias(tape.matmul(x, w_input), bias), tape.matmul(h_prev, w_hidden));
  return lstm_gates(tape, pre, c_prev);
}

template <typename T>
Var embed(Tape<T>& tape, Var table, std::span<const int> ids, std::span<const T> row_mask) {
  return tape.embedding(table, ids, row_mask);
}

template <typename T>
ForwardResult<T> forward(Tape<T>& tape, const BoundParameters& params, const MaskSet<T>* masks,
                         std::span<const int> inputs, std::size_t batch, const HiddenState<T>& state) {
  const ModelShape& shape = params.shape;
  AWDLM_REQUIRE(batch > 0 && !inputs.empty() && inputs.size() % batch == 0,
                "forward: " + std::to_string(inputs.size()) + " ids do not form whole timesteps of batch " +
                    std::to_string(batch));
  AWDLM_REQUIRE(state.h.size() == shape.layers && state.batch() == batch,
                "forward: hidden state is for batch " + std::to_string(state.batch()) + " but the window has batch " +
                    std::to_string(batch));
  AWDLM_REQUIRE(masks == nullptr || masks->batch == batch,
                "forward: masks sampled for batch " + std::to_string(masks ? masks->batch : 0) +
                    " but the window has batch " + std::to_string(batch));

  const std::size_t length = inputs.size() / batch;
  ForwardResult<T> out;
  out.batch = batch;
  out.length = length;

  std::span<const T> row_mask;
  if (masks) row_mask = masks->embedding_rows;
  Var x = embed(tape, params.embedding, inputs, row_mask);
  if (masks) x = tape.locked_mask(x, tape.constant(masks->input));

  for (std::size_t l = 0; l < shape.layers; ++l) {
    const BoundLayer& layer = params.layers[l];
    const Var projected = tape.add_bias(tape.matmul(x, layer.w_input), layer.bias);
    const Var recurrent =
        masks ? tape.mul(layer.w_hidden, tape.constant(masks->recurrent[l])) : layer.w_hidden;

    Var h = tape.constant(state.h[l]);
    Var c = tape.constant(state.c[l]);
    std::vector<Var> steps;
    steps.reserve(length);
    for (std::size_t t = 0; t < length; ++t) {
      const Var pre = tape.add(tape.slice_rows(projected, t * batch, batch), tape.matmul(h, recurrent));
      const CellOutput cell = lstm_gates(tape, pre, c);
      h = cell.h;
      c = cell.c;
      steps.push_back(h);
    }
    out.state.h.push_back(tape.value(h));
    out.state.c.push_back(tape.value(c));

    x = tape.concat_rows(steps);
    if (masks && l + 1 < shape.layers) x = tape.locked_mask(x, tape.constant(masks->between_layers[l]));
  }

  out.raw_output = x;
  out.dropped_output = masks ? tape.locked_mask(x, tape.constant(masks->output)) : x;
  out.logits = tape.add_bias(tape.matmul_nt(out.dropped_output, params.embedding), params.decoder_bias);
  return out;
}

template <typename T>
LossTerms language_model_loss(Tape<T>& tape, const ForwardResult<T>& fwd, std::span<const int> targets,
                              double alpha, double beta) {
  AWDLM_REQUIRE(alpha >= 0.0 && beta >= 0.0, "loss: AR/TAR coefficients must be non-negative (alpha=" +
                                                  std::to_string(alpha) + ", beta=" + std::to_string(beta) + ")");
  AWDLM_REQUIRE(fwd.length >= 1, "loss: empty window");
  LossTerms terms;
  terms.cross_entropy = tape.softmax_cross_entropy(fwd.logits, targets);
  terms.total = terms.cross_entropy;
  if (alpha > 0.0) {
    terms.activation = tape.scale(tape.mean(tape.row_norms(fwd.dropped_output)), static_cast<T>(alpha));
    terms.total = tape.add(terms.total, *terms.activation);
  }
  if (beta > 0.0 && fwd.length >= 2) {
    const std::size_t pairs = (fwd.length - 1) * fwd.batch;
    const Var later = tape.slice_rows(fwd.raw_output, fwd.batch, pairs);
    const Var earlier = tape.slice_rows(fwd.raw_output, 0, pairs);
    terms.temporal = tape.scale(tape.mean(tape.row_norms(tape.sub(earlier, later))), static_cast<T>(beta));
    terms.total = tape.add(terms.total, *terms.temporal);
  }
  return terms;
}

#define AWDLM_INSTANTIATE_NETWORK(T)                                                                        \
  template BoundParameters bind_parameters<T>(Tape<T>&, LMParameters<T>&);                                  \
  template BoundParameters bind_parameters<T>(Tape<T>&, const LMParameters<T>&);                            \
  template HiddenState<T> initial_state<T>(const ModelShape&, std::size_t);                                 \
  template CellOutput lstm_gates<T>(Tape<T>&, Var, Var);                                                    \
  template CellOutput lstm_cell<T>(Tape<T>&, Var, Var, Var, Var, Var, Var);                                 \
  template Var embed<T>(Tape<T>&, Var, std::span<const int>, std::span<const T>);                           \
  template ForwardResult<T> forward<T>(Tape<T>&, const BoundParameters&, const MaskSet<T>*,                 \
                                       std::span<const int>, std::size_t, const HiddenState<T>&);           \
  template LossTerms language_model_loss<T>(Tape<T>&, const ForwardResult<T>&, std::span<const int>, double, \
                                            double);

AWDLM_INSTANTIATE_NETWORK(float)
AWDLM_INSTANTIATE_NETWORK(double)

}  // namespace awdlm
