// SPDX-License-Identifier: Apache-2.0
#include "model/parameters.hpp"

#include <cmath>

namespace awdlm {

void ModelShape::validate() const {
  AWDLM_REQUIRE(vocab > 0 && embed > 0 && hidden > 0 && layers > 0,
                "model shape: all dimensions must be positive (V=" + std::to_string(vocab) +
                    ", e=" + std::to_string(embed) + ", H=" + std::to_string(hidden) +
                    ", L=" + std::to_string(layers) + ")");
  AWDLM_REQUIRE(embed <= hidden, "model shape: embedding size " + std::to_string(embed) +
                                     " exceeds hidden size " + std::to_string(hidden));
}

template <typename T>
std::vector<Tensor<T>*> LMParameters<T>::tensors() {
  std::vector<Tensor<T>*> out{&embedding};
  for (auto& l : layers) {
    out.push_back(&l.w_input);
    out.push_back(&l.w_hidden);
    out.push_back(&l.bias);
  }
  out.push_back(&decoder_bias);
  return out;
}

template <typename T>
std::vector<const Tensor<T>*> LMParameters<T>::tensors() const {
  std::vector<const Tensor<T>*> out{&embedding};
  for (const auto& l : layers) {
    out.push_back(&l.w_input);
    out.push_back(&l.w_hidden);
    out.push_back(&l.bias);
  }
  out.push_back(&decoder_bias);
  return out;
}

template <typename T>
std::vector<std::string> LMParameters<T>::names() const {
  std::vector<std::string> out{"embedding"};
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::string prefix = "layer" + std::to_string(l) + ".";
    out.push_back(prefix + "w_input");
    out.push_back(prefix + "w_hidden");
    out.push_back(prefix + "bias");
  }
  out.push_back("decoder_bias");
  return out;
}

template <typename T>
std::size_t LMParameters<T>::parameter_count() const {
  std::size_t n = 0;
  for (const Tensor<T>* t : tensors()) n += t->size();
  return n;
}

template <typename T>
void LMParameters<T>::set_requires_grad(bool on) {
  for (Tensor<T>* t : tensors()) t->set_requires_grad(on);
}

template <typename T>
void LMParameters<T>::zero_grad() {
  for (Tensor<T>* t : tensors()) t->zero_grad();
}

template <typename T>
LMParameters<T> zero_parameters(const ModelShape& shape) {
  shape.validate();
  LMParameters<T> p;
  p.shape = shape;
  p.embedding = Tensor<T>::matrix(shape.vocab, shape.embed);
  for (std::size_t l = 0; l < shape.layers; ++l) {
    const std::size_t in = shape.input_width(l), out = shape.output_width(l);
    p.layers.push_back({Tensor<T>::matrix(in, 4 * out), Tensor<T>::matrix(out, 4 * out),
                        Tensor<T>::matrix(1, 4 * out)});
  }
  p.decoder_bias = Tensor<T>::matrix(1, shape.vocab);
  return p;
}

template <typename T>
LMParameters<T> init_parameters(const ModelShape& shape, Rng& rng) {
  LMParameters<T> p = zero_parameters<T>(shape);
  for (T& v : p.embedding.data()) v = static_cast<T>(rng.uniform(-0.1, 0.1));
  const double bound = 1.0 / std::sqrt(static_cast<double>(shape.hidden));
  for (auto& l : p.layers) {
    for (T& v : l.w_input.data()) v = static_cast<T>(rng.uniform(-bound, bound));
    for (T& v : l.w_hidden.data()) v = static_cast<T>(rng.uniform(-bound, bound));
  }
  return p;
}

template <typename To, typename From>
LMParameters<To> convert_parameters(const LMParameters<From>& from) {
  LMParameters<To> to = zero_parameters<To>(from.shape);
  auto src = from.tensors();
  auto dst = to.tensors();
  for (std::size_t i = 0; i < src.size(); ++i) {
    auto s = src[i]->data();
    auto d = dst[i]->data();
    for (std::size_t j = 0; j < s.size(); ++j) d[j] = static_cast<To>(s[j]);
  }
  return to;
}

template struct LMParameters<float>;
template struct LMParameters<double>;
template LMParameters<float> init_parameters<float>(const ModelShape&, Rng&);
template LMParameters<double> init_parameters<double>(const ModelShape&, Rng&);
template LMParameters<float> zero_parameters<float>(const ModelShape&);
template LMParameters<double> zero_parameters<double>(const ModelShape&);
template LMParameters<double> convert_parameters<double, float>(const LMParameters<float>&);
template LMParameters<float> convert_parameters<float, double>(const LMParameters<double>&);
template LMParameters<float> convert_parameters<float, float>(const LMParameters<float>&);
template LMParameters<double> convert_parameters<double, double>(const LMParameters<double>&);

}  // namespace awdlm
