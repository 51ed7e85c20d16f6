// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "numerics/rng.hpp"
#include "numerics/tensor.hpp"

namespace awdlm {

struct ModelShape {
  std::size_t vocab = 0;
  std::size_t embed = 0;
  std::size_t hidden = 0;
  std::size_t layers = 0;

  // The first layer reads embeddings and the last layer writes them, so with
  // a reduced embedding only the inner widths are `hidden`.
  std::size_t input_width(std::size_t layer) const { return layer == 0 ? embed : hidden; }
  std::size_t output_width(std::size_t layer) const { return layer + 1 == layers ? embed : hidden; }

  void validate() const;
  bool operator==(const ModelShape&) const = default;
};

// Gate blocks are laid out [input, forget, output, candidate] along columns.
template <typename T>
struct LayerParameters {
  Tensor<T> w_input;   // in x 4*out
  Tensor<T> w_hidden;  // out x 4*out, the DropConnect target
  Tensor<T> bias;      // 1 x 4*out
};

// Parameters of the tied LM. The softmax projection has no storage of its
// own: it reads `embedding`, so any update to one is an update to both.
template <typename T>
struct LMParameters {
  ModelShape shape;
  Tensor<T> embedding;  // V x e
  std::vector<LayerParameters<T>> layers;
  Tensor<T> decoder_bias;  // 1 x V

  const Tensor<T>& softmax_weight() const { return embedding; }
  Tensor<T>& softmax_weight() { return embedding; }

  // Stable order: embedding, then per layer w_input, w_hidden, bias, then
  // decoder_bias.
  std::vector<Tensor<T>*> tensors();
  std::vector<const Tensor<T>*> tensors() const;
  std::vector<std::string> names() const;
  std::size_t parameter_count() const;

  void set_requires_grad(bool on);
  void zero_grad();
};

// Embedding ~ U[-0.1, 0.1]; every other weight ~ U[-1/sqrt(H), 1/sqrt(H)];
// biases zero.
template <typename T>
LMParameters<T> init_parameters(const ModelShape& shape, Rng& rng);

// All-zero parameters with the given shape.
template <typename T>
LMParameters<T> zero_parameters(const ModelShape& shape);

template <typename To, typename From>
LMParameters<To> convert_parameters(const LMParameters<From>& from);

extern template struct LMParameters<float>;
extern template struct LMParameters<double>;

}  // namespace awdlm
