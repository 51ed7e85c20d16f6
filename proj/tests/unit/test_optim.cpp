// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <vector>

#include "doctest.h"
#include "optim/ntasgd.hpp"
#include "optim/sgd.hpp"
#include "support/oracles.hpp"

using namespace awdlm;

namespace {

Tensor<double> with_grad(std::vector<double> values, std::vector<double> grad) {
  const std::size_t n = values.size();
  Tensor<double> t(Shape{1, n}, std::move(values));
  t.set_requires_grad(true);
  std::copy(grad.begin(), grad.end(), t.grad().begin());
  return t;
}

}  // namespace

TEST_CASE("global norm clipping") {
  SUBCASE("below the threshold nothing changes") {
    auto a = with_grad({0.0, 0.0}, {0.06, 0.08});
    std::vector<Tensor<double>*> ps = {&a};
    CHECK(clip_global_norm<double>(ps, 0.25) == doctest::Approx(0.1));
    CHECK(a.grad()[0] == 0.06);
    CHECK(a.grad()[1] == 0.08);
  }
  SUBCASE("(3, 4) is scaled to norm 0.25") {
    auto a = with_grad({0.0, 0.0}, {3.0, 4.0});
    std::vector<Tensor<double>*> ps = {&a};
    CHECK(clip_global_norm<double>(ps, 0.25) == 5.0);
    CHECK(a.grad()[0] == doctest::Approx(0.15).epsilon(1e-15));
    CHECK(a.grad()[1] == doctest::Approx(0.20).epsilon(1e-15));
  }
  SUBCASE("the norm spans every tensor") {
    auto a = with_grad({0.0}, {3.0});
    auto b = with_grad({0.0}, {4.0});
    std::vector<Tensor<double>*> ps = {&a, &b};
    CHECK(global_grad_norm<double>(ps) == 5.0);
    clip_global_norm<double>(ps, 1.0);
    CHECK(a.grad()[0] == doctest::Approx(0.6));
    CHECK(b.grad()[0] == doctest::Approx(0.8));
  }
  SUBCASE("random gradients end within the bound") {
    Rng rng(1);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<Tensor<double>> ts;
      for (int k = 0; k < 3; ++k) {
        std::vector<double> g(5);
        for (auto& v : g) v = rng.uniform(-3.0, 3.0);
        ts.push_back(with_grad(std::vector<double>(5, 0.0), g));
      }
      std::vector<Tensor<double>*> ps;
      for (auto& t : ts) ps.push_back(&t);
      clip_global_norm<double>(ps, 0.25);
      CHECK(global_grad_norm<double>(ps) <= 0.25 + 1e-12);
    }
  }
  SUBCASE("non-positive bound") {
    auto a = with_grad({0.0}, {1.0});
    std::vector<Tensor<double>*> ps = {&a};
    CHECK_THROWS_AS(clip_global_norm<double>(ps, 0.0), Error);
  }
}

TEST_CASE("sgd step") {
  SUBCASE("arithmetic") {
    auto w = with_grad({5.0}, {2.0});
    std::vector<Tensor<double>*> ps = {&w};
    sgd_step<double>(ps, 0.1);
    CHECK(w[0] == doctest::Approx(4.8).epsilon(1e-15));
    CHECK(w.grad()[0] == 0.0);
  }
  SUBCASE("zero step size") {
    auto w = with_grad({5.0}, {2.0});
    std::vector<Tensor<double>*> ps = {&w};
    sgd_step<double>(ps, 0.0);
    CHECK(w[0] == 5.0);
  }
  SUBCASE("quadratic trace") {
    auto w = with_grad({1.0}, {0.0});
    std::vector<Tensor<double>*> ps = {&w};
    std::vector<double> trace = {w[0]};
    for (int i = 0; i < 2; ++i) {
      w.grad()[0] = w[0];
      sgd_step<double>(ps, 1.0);
      trace.push_back(w[0]);
    }
    CHECK(trace == std::vector<double>{1.0, 0.0, 0.0});
  }
  SUBCASE("weight decay") {
    auto w = with_grad({2.0}, {0.0});
    std::vector<Tensor<double>*> ps = {&w};
    sgd_step<double>(ps, 0.5, 0.1);
    CHECK(w[0] == doctest::Approx(1.9));
  }
}

TEST_CASE("non-monotone trigger") {
  SUBCASE("worked example") {
    std::vector<double> logs = {10, 9, 8, 7, 6, 5};
    CHECK(nonmonotone_condition(logs, 5.5, 5));
    CHECK_FALSE(nonmonotone_condition(logs, 4.0, 5));
    CHECK(oracle::algorithm1_triggers(logs, 5.5, 5));
  }
  SUBCASE("guard clause") {
    std::vector<double> logs = {1, 1, 1};
    CHECK_FALSE(nonmonotone_condition(logs, 1e9, 5));
  }
  SUBCASE("strictly decreasing metric never triggers") {
    TrainerState s;
    Tensor<double> w = Tensor<double>::matrix(1, 1);
    std::vector<const Tensor<double>*> ps = {&w};
    for (int i = 0; i < 200; ++i) CHECK_FALSE(nt_asgd_check<double>(s, 1000.0 - i, 5, ps));
    CHECK(s.t == 200);
    CHECK(s.logs.size() == 200);
  }
  SUBCASE("agrees with the literal transcription") {
    Rng rng(2);
    for (int trial = 0; trial < 1000; ++trial) {
      const std::size_t n = 1 + rng.next_u64() % 6;
      const std::size_t len = rng.next_u64() % 15;
      std::vector<double> logs(len);
      for (auto& v : logs) v = std::floor(rng.uniform(0.0, 10.0));
      const double v = std::floor(rng.uniform(0.0, 10.0));
      CHECK(nonmonotone_condition(logs, v, n) == oracle::algorithm1_triggers(logs, v, n));
    }
  }
  SUBCASE("trigger is irreversible and records k") {
    TrainerState s;
    Tensor<double> w = Tensor<double>::matrix(1, 1, 3.0);
    std::vector<const Tensor<double>*> ps = {&w};
    for (double v : {5.0, 4.0, 3.0}) nt_asgd_check<double>(s, v, 2, ps);
    s.k = 17;
    CHECK(nt_asgd_check<double>(s, 3.5, 2, ps));
    CHECK(s.triggered);
    CHECK(s.trigger == 17);
    CHECK(s.avg_count == 1);
    CHECK(s.logs.size() == s.t);
    CHECK_THROWS_AS(nt_asgd_check<double>(s, 1.0, 2, ps), Error);
    CHECK(s.trigger == 17);
  }
}

TEST_CASE("iterate averaging") {
  Tensor<double> w = Tensor<double>::matrix(1, 1);
  std::vector<const Tensor<double>*> ps = {&w};
  SUBCASE("mean of two iterates") {
    TrainerState s;
    w[0] = 3.0;
    force_trigger<double>(s, ps);
    w[0] = 4.0;
    record_step<double>(s, ps);
    auto avg = finalize<double>(s, ps);
    CHECK_FALSE(avg.fell_back);
    CHECK(avg.tensors[0][0] == 3.5);
    CHECK(s.avg_count == s.k - s.trigger + 1);
  }
  SUBCASE("single iterate") {
    TrainerState s;
    w[0] = 1.25;
    force_trigger<double>(s, ps);
    CHECK(finalize<double>(s, ps).tensors[0][0] == 1.25);
  }
  SUBCASE("sum and count") {
    TrainerState s;
    w[0] = 0.0;
    force_trigger<double>(s, ps);
    s.iterate_sum[0][0] = 7.0;
    s.avg_count = 2;
    CHECK(finalize<double>(s, ps).tensors[0][0] == 3.5);
  }
  SUBCASE("untriggered falls back to the last iterate") {
    TrainerState s;
    w[0] = 9.0;
    CHECK_THROWS_AS(accumulate_average<double>(s, ps), Error);
    auto out = finalize<double>(s, ps);
    CHECK(out.fell_back);
    CHECK(out.tensors[0][0] == 9.0);
  }
  SUBCASE("running average equals the list mean") {
    Rng rng(3);
    TrainerState s;
    std::vector<double> seen;
    w[0] = rng.uniform(-1.0, 1.0);
    force_trigger<double>(s, ps);
    seen.push_back(w[0]);
    for (int i = 1; i < 100; ++i) {
      w[0] = rng.uniform(-1.0, 1.0);
      record_step<double>(s, ps);
      seen.push_back(w[0]);
    }
    double mean = 0.0;
    for (double v : seen) mean += v;
    mean /= static_cast<double>(seen.size());
    CHECK(std::abs(finalize<double>(s, ps).tensors[0][0] - mean) < 1e-12);
    CHECK(w[0] == seen.back());
  }
  SUBCASE("20-step toy run against recorded checkpoints") {
    Tensor<double> a = Tensor<double>::matrix(2, 3);
    a.set_requires_grad(true);
    std::vector<Tensor<double>*> mut = {&a};
    std::vector<const Tensor<double>*> cps = {&a};
    Rng rng(4);
    TrainerState s;
    std::vector<std::vector<double>> recorded;
    for (int step = 0; step < 20; ++step) {
      if (step == 8) {
        force_trigger<double>(s, cps);
        recorded.push_back(a.storage());
      }
      for (auto& g : a.grad()) g = rng.uniform(-1.0, 1.0);
      sgd_step<double>(mut, 0.1);
      record_step<double>(s, cps);
      if (s.triggered) recorded.push_back(a.storage());
    }
    auto avg = finalize<double>(s, cps);
    for (std::size_t j = 0; j < a.size(); ++j) {
      double m = 0.0;
      for (const auto& r : recorded) m += r[j];
      m /= static_cast<double>(recorded.size());
      CHECK(std::abs(avg.tensors[0][j] - m) < 1e-12);
    }
    CHECK(s.avg_count == recorded.size());
  }
}

TEST_CASE("without a trigger averaging reduces to sgd") {
  Tensor<double> a = Tensor<double>(Shape{1, 2}, std::vector<double>{1.0, -1.0});
  a.set_requires_grad(true);
  std::vector<Tensor<double>*> mut = {&a};
  std::vector<const Tensor<double>*> cps = {&a};
  TrainerState s;
  for (int i = 0; i < 30; ++i) {
    a.grad()[0] = a[0];
    a.grad()[1] = a[1];
    sgd_step<double>(mut, 0.1);
    record_step<double>(s, cps);
    if (i % 3 == 2) nt_asgd_check<double>(s, 100.0 - i, 1000, cps);
  }
  auto out = finalize<double>(s, cps);
  CHECK(out.fell_back);
  CHECK(out.tensors[0].storage() == a.storage());
}
