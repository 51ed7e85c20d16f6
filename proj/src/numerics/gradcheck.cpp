// SPDX-License-Identifier: Apache-2.0
#include "numerics/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace awdlm {
namespace {

template <typename T>
double evaluate(const LossBuilder<T>& loss) {
  Tape<T> tape(false);
  const Var out = loss(tape);
  const Tensor<T>& v = tape.value(out);
  AWDLM_REQUIRE(v.size() == 1, "check_gradient: loss must be a scalar, got shape " + to_string(v.shape()));
  return static_cast<double>(v[0]);
}

}  // namespace

template <typename T>
GradCheckReport check_gradient(std::span<Tensor<T>* const> parameters, const LossBuilder<T>& loss,
                               const GradCheckOptions& options) {
  AWDLM_REQUIRE(options.step > 0.0, "check_gradient: step must be positive");

  std::vector<bool> had_grad;
  for (Tensor<T>* p : parameters) {
    had_grad.push_back(p->requires_grad());
    p->set_requires_grad(true);
  }

  {
    Tape<T> tape(true);
    tape.backward(loss(tape));
  }
  std::vector<std::vector<T>> analytic;
  for (Tensor<T>* p : parameters) analytic.emplace_back(p->grad().begin(), p->grad().end());

  const double first = evaluate(loss);
  const double second = evaluate(loss);
  if (first != second && !(std::isnan(first) && std::isnan(second)))
    fail(ErrorCode::state, "check_gradient: loss is not deterministic (" + std::to_string(first) +
                               " vs " + std::to_string(second) + "); freeze all masks first");

  GradCheckReport report;
  for (std::size_t t = 0; t < parameters.size(); ++t) {
    auto data = parameters[t]->data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const T saved = data[i];
      data[i] = static_cast<T>(saved + options.step);
      const double plus = evaluate(loss);
      data[i] = static_cast<T>(saved - options.step);
      const double minus = evaluate(loss);
      data[i] = saved;

      const double numeric = (plus - minus) / (2.0 * options.step);
      const double exact = static_cast<double>(analytic[t][i]);
      const double abs_err = std::abs(exact - numeric);
      const double denom = std::max({std::abs(exact), std::abs(numeric), options.floor});
      const double rel = abs_err / denom;
      report.relative_errors.push_back(rel);
      report.max_absolute_error = std::max(report.max_absolute_error, abs_err);
      if (rel > report.max_relative_error || report.coordinates == 0) {
        report.max_relative_error = std::max(report.max_relative_error, rel);
        report.worst_tensor = t;
        report.worst_index = i;
      }
      ++report.coordinates;
    }
  }
  report.passed = report.max_relative_error < options.tolerance;

  for (std::size_t t = 0; t < parameters.size(); ++t) parameters[t]->set_requires_grad(had_grad[t]);
  return report;
}

template GradCheckReport check_gradient<float>(std::span<Tensor<float>* const>, const LossBuilder<float>&,
                                               const GradCheckOptions&);
template GradCheckReport check_gradient<double>(std::span<Tensor<double>* const>, const LossBuilder<double>&,
                                                const GradCheckOptions&);

}  // namespace awdlm
