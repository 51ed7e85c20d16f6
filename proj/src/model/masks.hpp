// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "model/parameters.hpp"

namespace awdlm {

// Drop probabilities (not keep probabilities).
struct DropoutRates {
  double input = 0.4;      // on embedded word vectors
  double hidden = 0.3;     // between LSTM layers
  double output = 0.4;     // on the final LSTM output
  double embedding = 0.1;  // whole embedding rows
  double weight = 0.5;     // DropConnect on recurrent matrices

  void validate() const;
  static DropoutRates none() { return {0.0, 0.0, 0.0, 0.0, 0.0}; }
};

// Every mask of one forward/backward pass. Activation masks have one row
// per batch example and are reused at every timestep; all masks carry the
// inverted-dropout scale.
template <typename T>
struct MaskSet {
  std::size_t batch = 0;
  std::vector<T> embedding_rows;           // length V
  Tensor<T> input;                         // B x e
  std::vector<Tensor<T>> between_layers;   // L-1 masks, B x width of layer l
  Tensor<T> output;                        // B x e
  std::vector<Tensor<T>> recurrent;        // per layer, shape of w_hidden
};

template <typename T>
MaskSet<T> sample_masks(const ModelShape& shape, const DropoutRates& rates, std::size_t batch, Rng& rng);

// Masks that keep everything (all ones).
template <typename T>
MaskSet<T> identity_masks(const ModelShape& shape, std::size_t batch);

// DropConnect: mask * U / (1 - p) for every recurrent matrix. The stored
// matrices are not modified.
template <typename T>
std::vector<Tensor<T>> apply_weight_drop(const LMParameters<T>& params, double p_wd, Rng& rng);

}  // namespace awdlm
