// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "numerics/tensor.hpp"

namespace awdlm {

// Handle to a value recorded on a Tape. Only meaningful for the tape that
// produced it.
struct Var {
  std::uint32_t id = std::numeric_limits<std::uint32_t>::max();
  bool valid() const noexcept { return id != std::numeric_limits<std::uint32_t>::max(); }
};

// Reverse-mode gradient tape over 2-D row-major tensors.
//
// Values are recorded in creation order; backward() walks the list in
// reverse and accumulates into every leaf parameter's grad buffer. A tape
// built with record_gradients=false stores values only, which is what the
// evaluation paths use.
//
// Broadcasting is deliberately absent except for add_bias (one row added to
// every row) and locked_mask (a batch-sized mask tiled over time-major rows).
template <typename T>
class Tape {
 public:
  explicit Tape(bool record_gradients = true) : record_(record_gradients) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // A trainable tensor. Gradients flow into parameter.grad() when the
  // parameter has requires_grad set. The tensor must outlive the tape.
  Var leaf(Tensor<T>& parameter);
  // Read-only reference to an external tensor (no copy, no gradient).
  Var view(const Tensor<T>& value);
  Var constant(Tensor<T> value);

  const Tensor<T>& value(Var v) const;
  // Gradient accumulated for an interior value during the last backward();
  // empty when nothing flowed into it.
  std::span<const T> grad(Var v) const;

  Var matmul(Var a, Var b);     // (m x k)(k x n)
  Var matmul_nt(Var a, Var b);  // (m x k)(n x k)^T
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, T factor);
  Var add_bias(Var a, Var bias);  // bias is (1 x cols)
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var slice_rows(Var a, std::size_t begin, std::size_t count);
  Var slice_cols(Var a, std::size_t begin, std::size_t count);
  Var concat_rows(std::span<const Var> parts);
  Var concat_cols(std::span<const Var> parts);
  Var row_norms(Var a);  // (rows x 1) Euclidean norm per row
  Var sum(Var a);
  Var mean(Var a);
  // Mean over rows of -log softmax(logits)[row, target].
  Var softmax_cross_entropy(Var logits, std::span<const int> targets);
  // Row gather from a (V x d) table; row_scale (length V, may be empty)
  // multiplies every gathered copy of a row.
  Var embedding(Var table, std::span<const int> ids, std::span<const T> row_scale = {});
  // out[r, j] = a[r, j] * mask[r % mask.rows, j]; mask is treated as data.
  Var locked_mask(Var a, Var mask);

  void backward(Var loss);

  std::size_t size() const noexcept { return nodes_.size(); }
  bool records_gradients() const noexcept { return record_; }

 private:
  struct Node {
    Tensor<T> owned;
    const Tensor<T>* ref = nullptr;
    Tensor<T>* param = nullptr;
    std::vector<T> grad;
    bool needs_grad = false;
    std::function<void(Tape&, std::uint32_t)> backprop;

    const Tensor<T>& val() const { return ref ? *ref : owned; }
  };

  Node& node(Var v);
  const Node& node(Var v) const;
  bool needs(Var v) const { return nodes_[v.id].needs_grad; }
  std::vector<T>& grad_of(std::uint32_t id);
  Var push(Tensor<T> value, bool needs_grad,
           std::function<void(Tape&, std::uint32_t)> backprop);
  const Tensor<T>& matrix_operand(Var v, const char* op) const;

  std::vector<Node> nodes_;
  bool record_;
};

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace awdlm
