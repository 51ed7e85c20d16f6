// SPDX-License-Identifier: Apache-2.0
#include "numerics/tape.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Core>

namespace awdlm {
namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatrixMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatrixMap = Eigen::Map<const RowMatrix<T>>;

template <typename T>
ConstMatrixMap<T> as_matrix(const Tensor<T>& t) {
  return ConstMatrixMap<T>(t.data().data(), static_cast<Eigen::Index>(t.rows()),
                           static_cast<Eigen::Index>(t.cols()));
}

template <typename T>
MatrixMap<T> as_matrix(std::vector<T>& buf, std::size_t rows, std::size_t cols) {
  return MatrixMap<T>(buf.data(), static_cast<Eigen::Index>(rows),
                      static_cast<Eigen::Index>(cols));
}

std::string shapes(const char* op, const Shape& a, const Shape& b) {
  return std::string(op) + ": incompatible shapes " + to_string(a) + " and " + to_string(b);
}

template <typename T>
T sigmoid_value(T x) {
  return x >= T(0) ? T(1) / (T(1) + std::exp(-x)) : std::exp(x) / (T(1) + std::exp(x));
}

}  // namespace

template <typename T>
typename Tape<T>::Node& Tape<T>::node(Var v) {
  AWDLM_REQUIRE(v.valid() && v.id < nodes_.size(), "tape: unknown value handle");
  return nodes_[v.id];
}

template <typename T>
const typename Tape<T>::Node& Tape<T>::node(Var v) const {
  AWDLM_REQUIRE(v.valid() && v.id < nodes_.size(), "tape: unknown value handle");
  return nodes_[v.id];
}

template <typename T>
std::vector<T>& Tape<T>::grad_of(std::uint32_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad.assign(n.val().size(), T(0));
  return n.grad;
}

template <typename T>
Var Tape<T>::push(Tensor<T> value, bool needs_grad,
                  std::function<void(Tape&, std::uint32_t)> backprop) {
  Node n;
  n.owned = std::move(value);
  n.needs_grad = record_ && needs_grad;
  if (n.needs_grad) n.backprop = std::move(backprop);
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

template <typename T>
const Tensor<T>& Tape<T>::matrix_operand(Var v, const char* op) const {
  const Tensor<T>& t = node(v).val();
  AWDLM_REQUIRE(t.rank() == 2, std::string(op) + ": expected a matrix, got shape " + to_string(t.shape()));
  return t;
}

template <typename T>
Var Tape<T>::leaf(Tensor<T>& parameter) {
  Node n;
  n.ref = &parameter;
  n.param = &parameter;
  n.needs_grad = record_ && parameter.requires_grad();
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

template <typename T>
Var Tape<T>::view(const Tensor<T>& value) {
  Node n;
  n.ref = &value;
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

template <typename T>
Var Tape<T>::constant(Tensor<T> value) {
  return push(std::move(value), false, nullptr);
}

template <typename T>
const Tensor<T>& Tape<T>::value(Var v) const {
  return node(v).val();
}

template <typename T>
std::span<const T> Tape<T>::grad(Var v) const {
  return node(v).grad;
}

template <typename T>
Var Tape<T>::matmul(Var a, Var b) {
  const Tensor<T>& x = matrix_operand(a, "matmul");
  const Tensor<T>& y = matrix_operand(b, "matmul");
  AWDLM_REQUIRE(x.cols() == y.rows(), shapes("matmul", x.shape(), y.shape()));
  Tensor<T> out = Tensor<T>::matrix(x.rows(), y.cols());
  as_matrix(out.storage(), x.rows(), y.cols()).noalias() = as_matrix(x) * as_matrix(y);
  return push(std::move(out), needs(a) || needs(b), [a, b](Tape& tp, std::uint32_t o) {
    const auto& xv = tp.nodes_[a.id].val();
    const auto& yv = tp.nodes_[b.id].val();
    auto& go = tp.nodes_[o].grad;
    ConstMatrixMap<T> g(go.data(), static_cast<Eigen::Index>(xv.rows()),
                        static_cast<Eigen::Index>(yv.cols()));
    if (tp.needs(a))
      as_matrix(tp.grad_of(a.id), xv.rows(), xv.cols()).noalias() += g * as_matrix(yv).transpose();
    if (tp.needs(b))
      as_matrix(tp.grad_of(b.id), yv.rows(), yv.cols()).noalias() += as_matrix(xv).transpose() * g;
  });
}

template <typename T>
Var Tape<T>::matmul_nt(Var a, Var b) {
  const Tensor<T>& x = matrix_operand(a, "matmul_nt");
  const Tensor<T>& y = matrix_operand(b, "matmul_nt");
  AWDLM_REQUIRE(x.cols() == y.cols(), shapes("matmul_nt", x.shape(), y.shape()));
  Tensor<T> out = Tensor<T>::matrix(x.rows(), y.rows());
  as_matrix(out.storage(), x.rows(), y.rows()).noalias() = as_matrix(x) * as_matrix(y).transpose();
  return push(std::move(out), needs(a) || needs(b), [a, b](Tape& tp, std::uint32_t o) {
    const auto& xv = tp.nodes_[a.id].val();
    const auto& yv = tp.nodes_[b.id].val();
    auto& go = tp.nodes_[o].grad;
    ConstMatrixMap<T> g(go.data(), static_cast<Eigen::Index>(xv.rows()),
                        static_cast<Eigen::Index>(yv.rows()));
    if (tp.needs(a))
      as_matrix(tp.grad_of(a.id), xv.rows(), xv.cols()).noalias() += g * as_matrix(yv);
    if (tp.needs(b))
      as_matrix(tp.grad_of(b.id), yv.rows(), yv.cols()).noalias() += g.transpose() * as_matrix(xv);
  });
}

template <typename T>
Var Tape<T>::add(Var a, Var b) {
  const Tensor<T>& x = node(a).val();
  const Tensor<T>& y = node(b).val();
  AWDLM_REQUIRE(x.same_shape(y), shapes("add", x.shape(), y.shape()));
  Tensor<T> out(x.shape(), std::vector<T>(x.data().begin(), x.data().end()));
  auto od = out.data();
  auto yd = y.data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] += yd[i];
  return push(std::move(out), needs(a) || needs(b), [a, b](Tape& tp, std::uint32_t o) {
    const auto& go = tp.nodes_[o].grad;
    for (Var v : {a, b}) {
      if (!tp.needs(v)) continue;
      auto& gv = tp.grad_of(v.id);
      for (std::size_t i = 0; i < go.size(); ++i) gv[i] += go[i];
    }
  });
}

template <typename T>
Var Tape<T>::sub(Var a, Var b) {
  const Tensor<T>& x = node(a).val();
  const Tensor<T>& y = node(b).val();
  AWDLM_REQUIRE(x.same_shape(y), shapes("sub", x.shape(), y.shape()));
  Tensor<T> out(x.shape());
  auto od = out.data();
  auto xd = x.data();
  auto yd = y.data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] = xd[i] - yd[i];
  return push(std::move(out), needs(a) || needs(b), [a, b](Tape& tp, std::uint32_t o) {
    const auto& go = tp.nodes_[o].grad;
    if (tp.needs(a)) {
      auto& ga = tp.grad_of(a.id);
      for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
    }
    if (tp.needs(b)) {
      auto& gb = tp.grad_of(b.id);
      for (std::size_t i = 0; i < go.size(); ++i) gb[i] -= go[i];
    }
  });
}

template <typename T>
Var Tape<T>::mul(Var a, Var b) {
  const Tensor<T>& x = node(a).val();
  const Tensor<T>& y = node(b).val();
  AWDLM_REQUIRE(x.same_shape(y), shapes("mul", x.shape(), y.shape()));
  Tensor<T> out(x.shape());
  auto od = out.data();
  auto xd = x.data();
  auto yd = y.data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] = xd[i] * yd[i];
  return push(std::move(out), needs(a) || needs(b), [a, b](Tape& tp, std::uint32_t o) {
    const auto& go = tp.nodes_[o].grad;
    auto xd = tp.nodes_[a.id].val().data();
    auto yd = tp.nodes_[b.id].val().data();
    if (tp.needs(a)) {
      auto& ga = tp.grad_of(a.id);
      for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * yd[i];
    }
    if (tp.needs(b)) {
      auto& gb = tp.grad_of(b.id);
      for (std::size_t i = 0; i < go.size(); ++i) gb[i] += go[i] * xd[i];
    }
  });
}

template <typename T>
Var Tape<T>::scale(Var a, T factor) {
  const Tensor<T>& x = node(a).val();
  Tensor<T> out(x.shape());
  auto od = out.data();
  auto xd = x.data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] = xd[i] * factor;
  return push(std::move(out), needs(a), [a, factor](Tape& tp, std::uint32_t o) {
    const auto& go = tp.nodes_[o].grad;
    auto& ga = tp.grad_of(a.id);
    for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * factor;
  });
}

template <typename T>
Var Tape<T>::add_bias(Var a, Var bias) {
  const Tensor<T>& x = matrix_operand(a, "add_bias");
  const Tensor<T>& b = node(bias).val();
  AWDLM_REQUIRE(b.size() == x.cols(), shapes("add_bias", x.shape(), b.shape()));
  Tensor<T> out(x.shape(), std::vector<T>(x.data().begin(), x.data().end()));
  const std::size_t rows = x.rows(), cols = x.cols();
  auto od = out.data();
  auto bd = b.data();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) od[r * cols + c] += bd[c];
  return push(std::move(out), needs(a) || needs(bias), [a, bias, rows, cols](Tape& tp, std::uint32_t o) {
    const auto& go = tp.nodes_[o].grad;
    if (tp.needs(a)) {
      auto& ga = tp.grad_of(a.id);
      for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
    }
    if (tp.needs(bias)) {
      auto& gb = tp.grad_of(bias.id);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) gb[c] += go[r * cols + c];
    }
  });
}

template <typename T>
Var Tape<T>::sigmoid(Var a) {
  const Tensor<T>& x = node(a).val();
  Tensor<T> out(x.shape());
  auto od = out.data();
  auto xd = x.data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] = sigmoid_value(xd[i]);
  return push(std::move(out), needs(a), [a](Tape& tp, std::uint32_t o) {
    const auto& go = tp.nodes_[o].grad;
    auto y = tp.nodes_[o].val().data();
    auto& ga = tp.grad_of(a.id);
    for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * y[i] * (T(1) - y[i]);
  });
}

template <typename T>
Var Tape<T>::tanh(Var a) {
  const Tensor<T>& x = node(a).val();
  Tensor<T> out(x.shape());
  auto od = out.data();
  auto xd = x.data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] = std::tanh(xd[i]);
  return push(std::move(out), needs(a), [a](Tape& tp, std::uint32_t o) {
    const auto& go = tp.nodes_[o].grad;
    auto y = tp.nodes_[o].val().data();
    auto& ga = tp.grad_of(a.id);
    for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * (T(1) - y[i] * y[i]);
  });
}

template <typename T>
Var Tape<T>::slice_rows(Var a, std::size_t begin, std::size_t count) {
  const Tensor<T>& x = matrix_operand(a, "slice_rows");
  AWDLM_REQUIRE(count > 0 && begin + count <= x.rows(),
          "slice_rows: rows [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
              ") out of range for shape " + to_string(x.shape()));
  const std::size_t cols = x.cols();
  auto xd = x.data();
  std::vector<T> buf(xd.begin() + static_cast<std::ptrdiff_t>(begin * cols),
                     xd.begin() + static_cast<std::ptrdiff_t>((begin + count) * cols));
  Tensor<T> out(Shape{count, cols}, std::move(buf));
  return push(std::move(out), needs(a), [a, begin, cols](Tape& tp, std::uint32_t o) {
    const auto& go = tp.nodes_[o].grad;
    auto& ga = tp.grad_of(a.id);
    const std::size_t offset = begin * cols;
    for (std::size_t i = 0; i < go.size(); ++i) ga[offset + i] += go[i];
  });
}

template <typename T>
Var Tape<T>::slice_cols(Var a, std::size_t begin, std::size_t count) {
  const Tensor<T>& x = matrix_operand(a, "slice_cols");
  AWDLM_REQUIRE(count > 0 && begin + count <= x.cols(),
          "slice_cols: columns [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
              ") out of range for shape " + to_string(x.shape()));
  const std::size_t rows = x.rows(), cols = x.cols();
  Tensor<T> out = Tensor<T>::matrix(rows, count);
  auto xd = x.data();
  auto od = out.data();
  for (std::size_t r = 0; r < rows; ++r)
    std::copy_n(xd.begin() + static_cast<std::ptrdiff_t>(r * cols + begin), count,
                od.begin() + static_cast<std::ptrdiff_t>(r * count));
  return push(std::move(out), needs(a), [a, begin, count, rows, cols](Tape& tp, std::uint32_t o) {
    const auto& go = tp.nodes_[o].grad;
    auto& ga = tp.grad_of(a.id);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < count; ++c) ga[r * cols + begin + c] += go[r * count + c];
  });
}

template <typename T>
Var Tape<T>::concat_rows(std::span<const Var> parts) {
  AWDLM_REQUIRE(!parts.empty(), "concat_rows: no inputs");
  const std::size_t cols = matrix_operand(parts[0], "concat_rows").cols();
  std::size_t rows = 0;
  bool any = false;
  for (Var p : parts) {
    const Tensor<T>& x = matrix_operand(p, "concat_rows");
    AWDLM_REQUIRE(x.cols() == cols, shapes("concat_rows", value(parts[0]).shape(), x.shape()));
    rows += x.rows();
    any = any || needs(p);
  }
  std::vector<T> buf;
  buf.reserve(rows * cols);
  for (Var p : parts) {
    auto d = value(p).data();
    buf.insert(buf.end(), d.begin(), d.end());
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return push(Tensor<T>(Shape{rows, cols}, std::move(buf)), any,
              [inputs = std::move(inputs)](Tape& tp, std::uint32_t o) {
                const auto& go = tp.nodes_[o].grad;
                std::size_t offset = 0;
                for (Var p : inputs) {
                  const std::size_t n = tp.nodes_[p.id].val().size();
                  if (tp.needs(p)) {
                    auto& gp = tp.grad_of(p.id);
                    for (std::size_t i = 0; i < n; ++i) gp[i] += go[offset + i];
                  }
                  offset += n;
                }
              });
}

template <typename T>
Var Tape<T>::concat_cols(std::span<const Var> parts) {
  AWDLM_REQUIRE(!parts.empty(), "concat_cols: no inputs");
  const std::size_t rows = matrix_operand(parts[0], "concat_cols").rows();
  std::size_t cols = 0;
  bool any = false;
  for (Var p : parts) {
    const Tensor<T>& x = matrix_operand(p, "concat_cols");
    AWDLM_REQUIRE(x.rows() == rows, shapes("concat_cols", value(parts[0]).shape(), x.shape()));
    cols += x.cols();
    any = any || needs(p);
  }
  Tensor<T> out = Tensor<T>::matrix(rows, cols);
  std::size_t col0 = 0;
  for (Var p : parts) {
    const Tensor<T>& x = value(p);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < x.cols(); ++c) out.at(r, col0 + c) = x.at(r, c);
    col0 += x.cols();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return push(std::move(out), any, [inputs = std::move(inputs), rows, cols](Tape& tp, std::uint32_t o) {
    const auto& go = tp.nodes_[o].grad;
    std::size_t col0 = 0;
    for (Var p : inputs) {
      const std::size_t w = tp.nodes_[p.id].val().cols();
      if (tp.needs(p)) {
        auto& gp = tp.grad_of(p.id);
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t c = 0; c < w; ++c) gp[r * w + c] += go[r * cols + col0 + c];
      }
      col0 += w;
    }
  });
}

template <typename T>
Var Tape<T>::row_norms(Var a) {
  const Tensor<T>& x = matrix_operand(a, "row_norms");
  const std::size_t rows = x.rows(), cols = x.cols();
  Tensor<T> out = Tensor<T>::matrix(rows, 1);
  for (std::size_t r = 0; r < rows; ++r) {
    T s = T(0);
    for (std::size_t c = 0; c < cols; ++c) s += x.at(r, c) * x.at(r, c);
    out[r] = std::sqrt(s);
  }
  return push(std::move(out), needs(a), [a, rows, cols](Tape& tp, std::uint32_t o) {
    const auto& go = tp.nodes_[o].grad;
    const auto& norms = tp.nodes_[o].val();
    const auto& xv = tp.nodes_[a.id].val();
    auto& ga = tp.grad_of(a.id);
    for (std::size_t r = 0; r < rows; ++r) {
      // The norm has no gradient at the origin; use the zero subgradient.
      if (norms[r] == T(0)) continue;
      const T k = go[r] / norms[r];
      for (std::size_t c = 0; c < cols; ++c) ga[r * cols + c] += k * xv.at(r, c);
    }
  });
}

template <typename T>
Var Tape<T>::sum(Var a) {
  const Tensor<T>& x = node(a).val();
  T s = T(0);
  for (T v : x.data()) s += v;
  return push(Tensor<T>::scalar(s), needs(a), [a](Tape& tp, std::uint32_t o) {
    const T g = tp.nodes_[o].grad[0];
    for (T& v : tp.grad_of(a.id)) v += g;
  });
}

template <typename T>
Var Tape<T>::mean(Var a) {
  const Tensor<T>& x = node(a).val();
  T s = T(0);
  for (T v : x.data()) s += v;
  const T n = static_cast<T>(x.size());
  return push(Tensor<T>::scalar(s / n), needs(a), [a, n](Tape& tp, std::uint32_t o) {
    const T g = tp.nodes_[o].grad[0] / n;
    for (T& v : tp.grad_of(a.id)) v += g;
  });
}

template <typename T>
Var Tape<T>::softmax_cross_entropy(Var logits, std::span<const int> targets) {
  const Tensor<T>& x = matrix_operand(logits, "softmax_cross_entropy");
  const std::size_t rows = x.rows(), cols = x.cols();
  AWDLM_REQUIRE(targets.size() == rows, "softmax_cross_entropy: " + std::to_string(targets.size()) +
                                      " targets for logits of shape " + to_string(x.shape()));
  std::vector<T> probs(x.size());
  double total = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const int target = targets[r];
    AWDLM_REQUIRE(target >= 0 && static_cast<std::size_t>(target) < cols,
            "softmax_cross_entropy: target " + std::to_string(target) + " outside vocabulary of " +
                std::to_string(cols));
    const T* row = x.data().data() + r * cols;
    T* p = probs.data() + r * cols;
    const T peak = *std::max_element(row, row + cols);
    T z = T(0);
    for (std::size_t c = 0; c < cols; ++c) {
      p[c] = std::exp(row[c] - peak);
      z += p[c];
    }
    for (std::size_t c = 0; c < cols; ++c) p[c] /= z;
    total += static_cast<double>(std::log(z) + peak - row[target]);
  }
  const T loss = static_cast<T>(total / static_cast<double>(rows));
  std::vector<int> tgt(targets.begin(), targets.end());
  return push(Tensor<T>::scalar(loss), needs(logits),
              [logits, rows, cols, probs = std::move(probs), tgt = std::move(tgt)](Tape& tp, std::uint32_t o) {
                const T g = tp.nodes_[o].grad[0] / static_cast<T>(rows);
                auto& gl = tp.grad_of(logits.id);
                for (std::size_t r = 0; r < rows; ++r) {
                  for (std::size_t c = 0; c < cols; ++c) gl[r * cols + c] += g * probs[r * cols + c];
                  gl[r * cols + static_cast<std::size_t>(tgt[r])] -= g;
                }
              });
}

template <typename T>
Var Tape<T>::embedding(Var table, std::span<const int> ids, std::span<const T> row_scale) {
  const Tensor<T>& e = matrix_operand(table, "embedding");
  const std::size_t vocab = e.rows(), dim = e.cols();
  AWDLM_REQUIRE(row_scale.empty() || row_scale.size() == vocab,
          "embedding: row scale of length " + std::to_string(row_scale.size()) +
              " for table of shape " + to_string(e.shape()));
  AWDLM_REQUIRE(!ids.empty(), "embedding: no ids");
  Tensor<T> out = Tensor<T>::matrix(ids.size(), dim);
  for (std::size_t r = 0; r < ids.size(); ++r) {
    const int id = ids[r];
    AWDLM_REQUIRE(id >= 0 && static_cast<std::size_t>(id) < vocab,
            "embedding: id " + std::to_string(id) + " outside vocabulary of " + std::to_string(vocab));
    const T s = row_scale.empty() ? T(1) : row_scale[static_cast<std::size_t>(id)];
    for (std::size_t c = 0; c < dim; ++c) out.at(r, c) = e.at(static_cast<std::size_t>(id), c) * s;
  }
  std::vector<int> idv(ids.begin(), ids.end());
  std::vector<T> scale(row_scale.begin(), row_scale.end());
  return push(std::move(out), needs(table),
              [table, dim, idv = std::move(idv), scale = std::move(scale)](Tape& tp, std::uint32_t o) {
                const auto& go = tp.nodes_[o].grad;
                auto& gt = tp.grad_of(table.id);
                for (std::size_t r = 0; r < idv.size(); ++r) {
                  const auto id = static_cast<std::size_t>(idv[r]);
                  const T s = scale.empty() ? T(1) : scale[id];
                  if (s == T(0)) continue;
                  for (std::size_t c = 0; c < dim; ++c) gt[id * dim + c] += go[r * dim + c] * s;
                }
              });
}

template <typename T>
Var Tape<T>::locked_mask(Var a, Var mask) {
  const Tensor<T>& x = matrix_operand(a, "locked_mask");
  const Tensor<T>& m = matrix_operand(mask, "locked_mask");
  AWDLM_REQUIRE(m.cols() == x.cols() && x.rows() % m.rows() == 0, shapes("locked_mask", x.shape(), m.shape()));
  const std::size_t rows = x.rows(), cols = x.cols(), period = m.rows();
  Tensor<T> out(x.shape());
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out.at(r, c) = x.at(r, c) * m.at(r % period, c);
  return push(std::move(out), needs(a), [a, mask, rows, cols, period](Tape& tp, std::uint32_t o) {
    const auto& go = tp.nodes_[o].grad;
    const auto& mv = tp.nodes_[mask.id].val();
    auto& ga = tp.grad_of(a.id);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) ga[r * cols + c] += go[r * cols + c] * mv.at(r % period, c);
  });
}

template <typename T>
void Tape<T>::backward(Var loss) {
  AWDLM_REQUIRE(record_, "backward: tape was built without gradient recording");
  const Tensor<T>& l = node(loss).val();
  AWDLM_REQUIRE(l.size() == 1, "backward: loss must be a scalar, got shape " + to_string(l.shape()));
  for (auto& n : nodes_) n.grad.clear();
  if (!nodes_[loss.id].needs_grad) return;
  grad_of(loss.id)[0] = T(1);
  for (std::uint32_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.needs_grad || n.grad.empty()) continue;
    if (n.backprop) n.backprop(*this, i);
    if (n.param) {
      auto g = n.param->grad();
      for (std::size_t j = 0; j < g.size(); ++j) g[j] += n.grad[j];
    }
  }
}

template class Tape<float>;
template class Tape<double>;

}  // namespace awdlm
