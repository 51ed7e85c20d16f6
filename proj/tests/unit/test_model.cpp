// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <vector>

#include "doctest.h"
#include "model/inference.hpp"
#include "model/masks.hpp"
#include "model/network.hpp"
#include "numerics/gradcheck.hpp"
#include "support/oracles.hpp"

using namespace awdlm;

namespace {

const ModelShape kToy{7, 4, 8, 2};

HiddenState<double> random_state(const ModelShape& s, std::size_t B, Rng& rng) {
  HiddenState<double> st = initial_state<double>(s, B);
  for (auto* group : {&st.h, &st.c})
    for (auto& t : *group)
      for (auto& v : t.storage()) v = rng.uniform(-0.5, 0.5);
  return st;
}

std::vector<std::vector<double>> to_vectors(const std::vector<Tensor<double>>& ts) {
  std::vector<std::vector<double>> out;
  for (const auto& t : ts) out.emplace_back(t.storage());
  return out;
}

void randomize_biases(LMParameters<double>& p, Rng& rng) {
  for (auto& layer : p.layers)
    for (auto& v : layer.bias.storage()) v = rng.uniform(-0.2, 0.2);
  for (auto& v : p.decoder_bias.storage()) v = rng.uniform(-0.2, 0.2);
}

}  // namespace

TEST_CASE("initialisation bounds") {
  Rng rng(1);
  ModelShape s{50, 20, 1150, 2};
  auto p = init_parameters<double>(s, rng);
  const double bound = 1.0 / std::sqrt(1150.0);
  CHECK(bound == doctest::Approx(0.02949).epsilon(1e-3));
  for (double v : p.embedding.data()) CHECK(std::abs(v) <= 0.1);
  for (const auto& layer : p.layers) {
    for (double v : layer.w_input.data()) CHECK(std::abs(v) <= bound);
    for (double v : layer.w_hidden.data()) CHECK(std::abs(v) <= bound);
    for (double v : layer.bias.data()) CHECK(v == 0.0);
  }
  Rng again(1);
  auto q = init_parameters<double>(s, again);
  for (std::size_t i = 0; i < p.tensors().size(); ++i) CHECK(p.tensors()[i]->storage() == q.tensors()[i]->storage());
}

TEST_CASE("layer widths with a reduced embedding") {
  ModelShape s{100, 40, 115, 3};
  Rng rng(2);
  auto p = init_parameters<float>(s, rng);
  CHECK(p.layers[0].w_input.shape() == Shape{40, 4 * 115});
  CHECK(p.layers[1].w_input.shape() == Shape{115, 4 * 115});
  CHECK(p.layers[2].w_input.shape() == Shape{115, 4 * 40});
  CHECK(p.layers[2].w_hidden.shape() == Shape{40, 4 * 40});
  CHECK(p.names().size() == p.tensors().size());
  std::size_t count = 0;
  for (const auto* t : p.tensors()) count += t->size();
  CHECK(p.parameter_count() == count);
  CHECK_THROWS_AS((ModelShape{10, 50, 20, 2}.validate()), Error);
}

TEST_CASE("weight drop") {
  Rng rng(3);
  auto p = init_parameters<double>(kToy, rng);
  const auto before = p.layers[0].w_hidden.storage();
  SUBCASE("p = 0 is the identity") {
    auto eff = apply_weight_drop(p, 0.0, rng);
    for (std::size_t l = 0; l < p.layers.size(); ++l) CHECK(eff[l].storage() == p.layers[l].w_hidden.storage());
  }
  SUBCASE("p = 0.5 zeroes or doubles") {
    auto eff = apply_weight_drop(p, 0.5, rng);
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
      auto u = p.layers[l].w_hidden.data();
      auto e = eff[l].data();
      for (std::size_t i = 0; i < u.size(); ++i) CHECK((e[i] == 0.0 || e[i] == 2.0 * u[i]));
    }
  }
  CHECK(p.layers[0].w_hidden.storage() == before);
}

TEST_CASE("lstm cell with zero weights") {
  Tape<double> t(false);
  Var x = t.constant(Tensor<double>::matrix(1, 3));
  Var h = t.constant(Tensor<double>::matrix(1, 1));
  Var W = t.constant(Tensor<double>::matrix(3, 4));
  Var U = t.constant(Tensor<double>::matrix(1, 4));
  Var b = t.constant(Tensor<double>::matrix(1, 4));
  auto one = lstm_cell(t, x, h, t.constant(Tensor<double>::matrix(1, 1, 1.0)), W, U, b);
  CHECK(t.value(one.c)[0] == 0.5);
  CHECK(t.value(one.h)[0] == doctest::Approx(0.5 * std::tanh(0.5)).epsilon(1e-15));
  CHECK(t.value(one.h)[0] == doctest::Approx(0.2311).epsilon(1e-3));
  auto zero = lstm_cell(t, x, h, t.constant(Tensor<double>::matrix(1, 1, 0.0)), W, U, b);
  CHECK(t.value(zero.c)[0] == 0.0);
  CHECK(t.value(zero.h)[0] == 0.0);
}

TEST_CASE("lstm cell gradient") {
  Rng rng(4);
  auto fill = [&](std::size_t r, std::size_t c) {
    Tensor<double> m = Tensor<double>::matrix(r, c);
    for (auto& v : m.storage()) v = rng.uniform(-0.8, 0.8);
    return m;
  };
  Tensor<double> x = fill(2, 3), h = fill(2, 5), c = fill(2, 5), W = fill(3, 20), U = fill(5, 20), b = fill(1, 20);
  std::vector<Tensor<double>*> ps = {&x, &h, &c, &W, &U, &b};
  auto report = check_gradient<double>(std::span<Tensor<double>* const>(ps), [&](Tape<double>& t) {
    auto out = lstm_cell(t, t.leaf(x), t.leaf(h), t.leaf(c), t.leaf(W), t.leaf(U), t.leaf(b));
    return t.add(t.sum(t.mul(out.h, out.h)), t.sum(t.tanh(out.c)));
  });
  CHECK(report.passed);
}

TEST_CASE("embedding dropout") {
  Tape<double> t(false);
  Tensor<double> table = Tensor<double>::matrix(4, 2, 1.0);
  Var tv = t.view(table);
  std::vector<int> ids = {2, 0, 1, 3, 0, 2};
  SUBCASE("no row mask is a plain lookup") {
    Var e = embed(t, tv, ids, std::span<const double>{});
    for (double v : t.value(e).data()) CHECK(v == 1.0);
  }
  SUBCASE("kept rows are scaled, dropped rows vanish everywhere") {
    Rng rng(5);
    auto rows = sample_bernoulli_mask<double>(rng, {4}, 0.9);
    rows[0] = 0.0;
    rows[2] = 1.0 / 0.9;
    Var e = embed(t, tv, ids, std::span<const double>(rows.storage()));
    const auto& out = t.value(e);
    for (std::size_t r = 0; r < ids.size(); ++r) {
      for (std::size_t j = 0; j < 2; ++j) {
        if (ids[r] == 0) CHECK(out.at(r, j) == 0.0);
        if (ids[r] == 2) CHECK(out.at(r, j) == doctest::Approx(1.0 / 0.9).epsilon(1e-15));
      }
    }
  }
  SUBCASE("out of range id") {
    std::vector<int> bad = {4};
    CHECK_THROWS_AS(embed(t, tv, bad, std::span<const double>{}), Error);
  }
}

TEST_CASE("zero parameters give a uniform softmax") {
  ModelShape s{3, 2, 4, 2};
  auto p = zero_parameters<double>(s);
  Tape<double> t(false);
  auto bound = bind_parameters(t, static_cast<const LMParameters<double>&>(p));
  std::vector<int> ids = {0, 1, 2, 0};
  auto fwd = forward(t, bound, static_cast<const MaskSet<double>*>(nullptr), ids, 2, initial_state<double>(s, 2));
  const auto& logits = t.value(fwd.logits);
  CHECK(logits.rows() == 4);
  CHECK(logits.cols() == 3);
  std::vector<int> targets = {1, 2, 0, 1};
  auto terms = language_model_loss(t, fwd, targets, 0.0, 0.0);
  CHECK(t.value(terms.total)[0] == doctest::Approx(std::log(3.0)).epsilon(1e-14));
}

TEST_CASE("loss terms on hand-made activations") {
  Tape<double> t(false);
  SUBCASE("uniform logits over four words") {
    ForwardResult<double> f;
    f.batch = 1;
    f.length = 2;
    f.logits = t.constant(Tensor<double>::matrix(2, 4, 0.3));
    f.raw_output = t.constant(Tensor<double>::matrix(2, 2));
    f.dropped_output = f.raw_output;
    std::vector<int> targets = {0, 3};
    auto terms = language_model_loss(t, f, targets, 0.0, 0.0);
    CHECK(t.value(terms.total)[0] == doctest::Approx(std::log(4.0)).epsilon(1e-14));
    CHECK_FALSE(terms.activation);
    CHECK_FALSE(terms.temporal);
  }
  SUBCASE("activation regularisation of (3, 4)") {
    ForwardResult<double> f;
    f.batch = 1;
    f.length = 1;
    f.logits = t.constant(Tensor<double>::matrix(1, 4));
    f.raw_output = t.constant(Tensor<double>(Shape{1, 2}, std::vector<double>{3.0, 4.0}));
    f.dropped_output = f.raw_output;
    std::vector<int> targets = {1};
    auto terms = language_model_loss(t, f, targets, 2.0, 1.0);
    REQUIRE(terms.activation);
    CHECK(t.value(*terms.activation)[0] == doctest::Approx(10.0).epsilon(1e-14));
    CHECK_FALSE(terms.temporal);
    CHECK(t.value(terms.total)[0] == doctest::Approx(10.0 + std::log(4.0)).epsilon(1e-14));
  }
  SUBCASE("temporal regularisation of a single pair") {
    ForwardResult<double> f;
    f.batch = 1;
    f.length = 2;
    f.logits = t.constant(Tensor<double>::matrix(2, 4));
    f.raw_output = t.constant(Tensor<double>(Shape{2, 2}, std::vector<double>{1.0, 1.0, 1.0, 2.0}));
    f.dropped_output = f.raw_output;
    std::vector<int> targets = {1, 2};
    auto terms = language_model_loss(t, f, targets, 0.0, 1.0);
    REQUIRE(terms.temporal);
    CHECK(t.value(*terms.temporal)[0] == doctest::Approx(1.0).epsilon(1e-14));
  }
  SUBCASE("negative coefficients are rejected") {
    ForwardResult<double> f;
    f.batch = 1;
    f.length = 1;
    f.logits = t.constant(Tensor<double>::matrix(1, 4));
    f.raw_output = t.constant(Tensor<double>::matrix(1, 2));
    f.dropped_output = f.raw_output;
    std::vector<int> targets = {0};
    CHECK_THROWS_AS(language_model_loss(t, f, targets, -1.0, 0.0), Error);
    CHECK_THROWS_AS(language_model_loss(t, f, targets, 0.0, -0.5), Error);
  }
}

TEST_CASE("forward matches the reference implementation") {
  Rng rng(6);
  auto p = init_parameters<double>(kToy, rng);
  for (auto& v : p.embedding.storage()) v *= 5.0;
  randomize_biases(p, rng);
  const std::size_t B = 2;
  std::vector<int> ids = {0, 3, 5, 3, 6, 1, 0, 2};  // len 4
  std::vector<int> targets = {3, 5, 3, 6, 1, 0, 2, 4};
  auto state = random_state(kToy, B, rng);
  DropoutRates rates{0.3, 0.3, 0.3, 0.2, 0.4};
  auto masks = sample_masks<double>(kToy, rates, B, rng);

  for (bool with_masks : {false, true}) {
    CAPTURE(with_masks);
    const MaskSet<double>* m = with_masks ? &masks : nullptr;
    Tape<double> t(false);
    auto bound = bind_parameters(t, static_cast<const LMParameters<double>&>(p));
    auto fwd = forward(t, bound, m, ids, B, state);
    auto terms = language_model_loss(t, fwd, targets, 2.0, 1.0);
    auto ref = oracle::lm_forward(p, m, ids, B, to_vectors(state.h), to_vectors(state.c));
    const auto& logits = t.value(fwd.logits).storage();
    REQUIRE(logits.size() == ref.logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) CHECK(logits[i] == doctest::Approx(ref.logits[i]).epsilon(1e-12));
    for (std::size_t l = 0; l < kToy.layers; ++l) {
      for (std::size_t i = 0; i < ref.h[l].size(); ++i) {
        CHECK(fwd.state.h[l].storage()[i] == doctest::Approx(ref.h[l][i]).epsilon(1e-12));
        CHECK(fwd.state.c[l].storage()[i] == doctest::Approx(ref.c[l][i]).epsilon(1e-12));
      }
    }
    CHECK(t.value(terms.total)[0] ==
          doctest::Approx(oracle::lm_loss(ref, targets, kToy.vocab, kToy.embed, B, 2.0, 1.0)).epsilon(1e-12));
  }
}

TEST_CASE("masks are locked across timesteps and resampled across passes") {
  Rng rng(7);
  auto p = init_parameters<double>(kToy, rng);
  const std::size_t B = 3;
  std::vector<int> ids = {1, 2, 3, 4, 5, 6, 0, 1, 2, 3, 4, 5};
  DropoutRates rates{0.5, 0.5, 0.5, 0.0, 0.5};
  auto m1 = sample_masks<double>(kToy, rates, B, rng);
  auto m2 = sample_masks<double>(kToy, rates, B, rng);
  CHECK(m1.input.storage() != m2.input.storage());
  CHECK(m1.recurrent[0].storage() != m2.recurrent[0].storage());

  Tape<double> t(false);
  auto bound = bind_parameters(t, static_cast<const LMParameters<double>&>(p));
  auto fwd = forward(t, bound, &m1, ids, B, initial_state<double>(kToy, B));
  const auto& dropped = t.value(fwd.dropped_output);
  const auto& raw = t.value(fwd.raw_output);
  for (std::size_t r = 0; r < dropped.rows(); ++r)
    for (std::size_t j = 0; j < kToy.embed; ++j)
      CHECK(dropped.at(r, j) == raw.at(r, j) * m1.output.at(r % B, j));
}

TEST_CASE("stale state is rejected") {
  Rng rng(8);
  auto p = init_parameters<double>(kToy, rng);
  Tape<double> t(false);
  auto bound = bind_parameters(t, static_cast<const LMParameters<double>&>(p));
  std::vector<int> ids = {0, 1, 2, 3};
  CHECK_THROWS_AS(forward(t, bound, static_cast<const MaskSet<double>*>(nullptr), ids, 2,
                          initial_state<double>(kToy, 4)),
                  Error);
}

TEST_CASE("tied weights share one storage") {
  Rng rng(9);
  auto p = init_parameters<double>(kToy, rng);
  CHECK(&p.softmax_weight() == &p.embedding);
  std::vector<int> ids = {2, 2};
  auto run = [&] {
    Tape<double> t(false);
    auto bound = bind_parameters(t, static_cast<const LMParameters<double>&>(p));
    auto emb = embed(t, bound.embedding, ids, std::span<const double>{});
    auto fwd = forward(t, bound, static_cast<const MaskSet<double>*>(nullptr), ids, 1, initial_state<double>(kToy, 1));
    return std::make_pair(t.value(emb).storage(), t.value(fwd.logits).storage());
  };
  auto before = run();
  p.embedding.at(2, 1) += 0.25;
  auto after = run();
  CHECK(after.first != before.first);
  CHECK(after.second != before.second);
  p.softmax_weight().at(5, 0) += 0.25;
  auto again = run();
  CHECK(again.second[5] != after.second[5]);
}

TEST_CASE("full language-model loss passes the gradient check") {
  Rng rng(10);
  ModelShape s{6, 4, 8, 2};
  auto p = init_parameters<double>(s, rng);
  randomize_biases(p, rng);
  const std::size_t B = 2;
  std::vector<int> ids = {0, 1, 2, 3, 4, 5};
  std::vector<int> targets = {1, 2, 3, 4, 5, 0};
  auto masks = sample_masks<double>(s, DropoutRates{0.3, 0.3, 0.3, 0.2, 0.3}, B, rng);
  auto state = random_state(s, B, rng);
  auto tensors = p.tensors();
  auto report = check_gradient<double>(std::span<Tensor<double>* const>(tensors), [&](Tape<double>& t) {
    auto bound = bind_parameters(t, p);
    auto fwd = forward(t, bound, &masks, ids, B, state);
    return language_model_loss(t, fwd, targets, 2.0, 1.0).total;
  });
  CHECK(report.max_relative_error < 1e-4);
}

TEST_CASE("evaluation of a uniform model") {
  ModelShape s{10, 4, 6, 2};
  auto p = zero_parameters<float>(s);
  std::vector<int> ids;
  for (int i = 0; i < 200; ++i) ids.push_back(i % 10);
  CHECK(evaluate_perplexity(p, ids, 4, 7) == doctest::Approx(10.0).epsilon(1e-6));
  auto trace = score_tokens(p, ids, 1, 9, true);
  CHECK(trace.losses.size() == 199);
  CHECK(trace.hidden.size() == 199 * 4);
  CHECK_THROWS_AS(score_tokens(p, ids, 2, 9, true), Error);
}
