// SPDX-License-Identifier: Apache-2.0
#include "model/masks.hpp"

namespace awdlm {
namespace {

void check_rate(double p, const char* name) {
  AWDLM_REQUIRE(p >= 0.0 && p < 1.0,
                std::string(name) + " dropout must be in [0, 1), got " + std::to_string(p));
}

}  // namespace

void DropoutRates::validate() const {
  check_rate(input, "input");
  check_rate(hidden, "hidden");
  check_rate(output, "output");
  check_rate(embedding, "embedding");
  check_rate(weight, "weight");
}

template <typename T>
MaskSet<T> sample_masks(const ModelShape& shape, const DropoutRates& rates, std::size_t batch, Rng& rng) {
  rates.validate();
  AWDLM_REQUIRE(batch > 0, "sample_masks: batch must be positive");
  MaskSet<T> m;
  m.batch = batch;
  const Tensor<T> rows = sample_bernoulli_mask<T>(rng, Shape{shape.vocab}, 1.0 - rates.embedding);
  m.embedding_rows.assign(rows.data().begin(), rows.data().end());
  m.input = sample_bernoulli_mask<T>(rng, Shape{batch, shape.embed}, 1.0 - rates.input);
  for (std::size_t l = 0; l + 1 < shape.layers; ++l)
    m.between_layers.push_back(
        sample_bernoulli_mask<T>(rng, Shape{batch, shape.output_width(l)}, 1.0 - rates.hidden));
  m.output = sample_bernoulli_mask<T>(rng, Shape{batch, shape.embed}, 1.0 - rates.output);
  for (std::size_t l = 0; l < shape.layers; ++l) {
    const std::size_t out = shape.output_width(l);
    m.recurrent.push_back(sample_bernoulli_mask<T>(rng, Shape{out, 4 * out}, 1.0 - rates.weight));
  }
  return m;
}

template <typename T>
MaskSet<T> identity_masks(const ModelShape& shape, std::size_t batch) {
  MaskSet<T> m;
  m.batch = batch;
  m.embedding_rows.assign(shape.vocab, T(1));
  m.input = Tensor<T>::matrix(batch, shape.embed, T(1));
  for (std::size_t l = 0; l + 1 < shape.layers; ++l)
    m.between_layers.push_back(Tensor<T>::matrix(batch, shape.output_width(l), T(1)));
  m.output = Tensor<T>::matrix(batch, shape.embed, T(1));
  for (std::size_t l = 0; l < shape.layers; ++l) {
    const std::size_t out = shape.output_width(l);
    m.recurrent.push_back(Tensor<T>::matrix(out, 4 * out, T(1)));
  }
  return m;
}

template <typename T>
std::vector<Tensor<T>> apply_weight_drop(const LMParameters<T>& params, double p_wd, Rng& rng) {
  AWDLM_REQUIRE(p_wd >= 0.0 && p_wd < 1.0, "weight drop must be in [0, 1), got " + std::to_string(p_wd));
  std::vector<Tensor<T>> out;
  for (const auto& layer : params.layers) {
    Tensor<T> mask = sample_bernoulli_mask<T>(rng, layer.w_hidden.shape(), 1.0 - p_wd);
    auto m = mask.data();
    auto u = layer.w_hidden.data();
    for (std::size_t i = 0; i < m.size(); ++i) m[i] *= u[i];
    out.push_back(std::move(mask));
  }
  return out;
}

template MaskSet<float> sample_masks<float>(const ModelShape&, const DropoutRates&, std::size_t, Rng&);
template MaskSet<double> sample_masks<double>(const ModelShape&, const DropoutRates&, std::size_t, Rng&);
template MaskSet<float> identity_masks<float>(const ModelShape&, std::size_t);
template MaskSet<double> identity_masks<double>(const ModelShape&, std::size_t);
template std::vector<Tensor<float>> apply_weight_drop<float>(const LMParameters<float>&, double, Rng&);
template std::vector<Tensor<double>> apply_weight_drop<double>(const LMParameters<double>&, double, Rng&);

}  // namespace awdlm
