// SPDX-License-Identifier: Apache-2.0
#include "cache/cache.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "common/error.hpp"

namespace awdlm {
namespace {

double dot(const float* a, const float* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return s;
}

void check_trace(const TokenTrace& trace) {
  AWDLM_REQUIRE(trace.hidden_width > 0 && trace.hidden.size() == trace.losses.size() * trace.hidden_width,
                "cache scoring needs a trace recorded with hidden states");
  AWDLM_REQUIRE(trace.targets.size() == trace.losses.size(), "cache scoring: malformed trace");
}

// Probability the cache assigns to each position's own target, for every
// (window, theta) combination: result[w][th][i]. Negative means the window
// was empty at i.
std::vector<std::vector<std::vector<double>>> cache_target_probabilities(const TokenTrace& trace,
                                                                         std::span<const std::size_t> windows,
                                                                         std::span<const double> thetas) {
  check_trace(trace);
  const std::size_t n = trace.losses.size();
  const std::size_t width = trace.hidden_width;
  const std::size_t widest = *std::max_element(windows.begin(), windows.end());
  std::vector<std::vector<std::vector<double>>> out(
      windows.size(), std::vector<std::vector<double>>(thetas.size(), std::vector<double>(n, -1.0)));
  std::vector<double> dots(widest);

  for (std::size_t i = 0; i < n; ++i) {
    const float* query = trace.hidden.data() + i * width;
    const std::size_t available = std::min(i, widest);
    // dots[d] pairs the query with position i - 1 - d (most recent first).
    for (std::size_t d = 0; d < available; ++d) dots[d] = dot(query, trace.hidden.data() + (i - 1 - d) * width, width);
    const int target = trace.targets[i];

    for (std::size_t ti = 0; ti < thetas.size(); ++ti) {
      const double theta = thetas[ti];
      for (std::size_t wi = 0; wi < windows.size(); ++wi) {
        const std::size_t span = std::min(available, windows[wi]);
        if (span == 0) continue;
        double peak = theta * dots[0];
        for (std::size_t d = 1; d < span; ++d) peak = std::max(peak, theta * dots[d]);
        double den = 0.0, num = 0.0;
        for (std::size_t d = 0; d < span; ++d) {
          const double e = std::exp(theta * dots[d] - peak);
          den += e;
          if (trace.targets[i - 1 - d] == target) num += e;
        }
        out[wi][ti][i] = num / den;
      }
    }
  }
  return out;
}

CacheEvaluation mixed_losses(const TokenTrace& trace, std::span<const double> cache_probs, double lambda) {
  CacheEvaluation ev;
  ev.targets = trace.targets;
  ev.losses.resize(trace.losses.size());
  double total = 0.0;
  for (std::size_t i = 0; i < trace.losses.size(); ++i) {
    const double base = trace.losses[i];
    if (lambda == 0.0 || cache_probs[i] < 0.0) {
      ev.losses[i] = base;
    } else {
      ev.losses[i] = -std::log((1.0 - lambda) * std::exp(-base) + lambda * cache_probs[i]);
    }
    total += ev.losses[i];
  }
  AWDLM_REQUIRE(!ev.losses.empty(), "cache scoring: empty trace");
  ev.perplexity = std::exp(total / static_cast<double>(ev.losses.size()));
  return ev;
}

}  // namespace

CacheWindow::CacheWindow(std::size_t capacity) : capacity_(capacity) {
  AWDLM_REQUIRE(capacity > 0, "cache window capacity must be positive");
}

void CacheWindow::push(std::span<const float> hidden, int target) {
  if (entries_.size() == capacity_) entries_.pop_front();
  entries_.push_back({std::vector<float>(hidden.begin(), hidden.end()), target});
}

void CacheConfig::validate() const {
  AWDLM_REQUIRE(window > 0, "cache window must be positive");
  AWDLM_REQUIRE(lambda >= 0.0 && lambda <= 1.0, "cache lambda must be in [0, 1], got " + std::to_string(lambda));
  AWDLM_REQUIRE(theta >= 0.0, "cache theta must be non-negative, got " + std::to_string(theta));
}

std::optional<std::vector<double>> cache_distribution(const CacheWindow& window, std::span<const float> query,
                                                      double theta, std::size_t vocab) {
  if (window.empty()) return std::nullopt;
  std::vector<double> scores(window.size());
  for (std::size_t i = 0; i < window.size(); ++i) {
    const auto& e = window[i];
    AWDLM_REQUIRE(e.hidden.size() == query.size(), "cache_distribution: query width " +
                                                       std::to_string(query.size()) + " vs stored " +
                                                       std::to_string(e.hidden.size()));
    AWDLM_REQUIRE(e.target >= 0 && static_cast<std::size_t>(e.target) < vocab,
                  "cache_distribution: stored target outside vocabulary");
    scores[i] = theta * dot(query.data(), e.hidden.data(), query.size());
  }
  const double peak = *std::max_element(scores.begin(), scores.end());
  std::vector<double> p(vocab, 0.0);
  double z = 0.0;
  for (std::size_t i = 0; i < window.size(); ++i) {
    const double e = std::exp(scores[i] - peak);
    p[static_cast<std::size_t>(window[i].target)] += e;
    z += e;
  }
  for (double& v : p) v /= z;
  return p;
}

std::vector<double> mix(std::span<const double> p_lm, const std::optional<std::vector<double>>& p_cache,
                        double lambda) {
  AWDLM_REQUIRE(lambda >= 0.0 && lambda <= 1.0, "mix: lambda must be in [0, 1], got " + std::to_string(lambda));
  std::vector<double> out(p_lm.begin(), p_lm.end());
  if (!p_cache) return out;
  AWDLM_REQUIRE(p_cache->size() == p_lm.size(), "mix: distributions over different vocabularies");
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (1.0 - lambda) * p_lm[i] + lambda * (*p_cache)[i];
  return out;
}

CacheEvaluation score_with_cache(const TokenTrace& trace, const CacheConfig& config) {
  config.validate();
  const std::size_t windows[] = {config.window};
  const double thetas[] = {config.theta};
  const auto probs = cache_target_probabilities(trace, windows, thetas);
  return mixed_losses(trace, probs[0][0], config.lambda);
}

template <typename T>
CacheEvaluation evaluate_with_cache(const LMParameters<T>& params, std::span<const int> ids,
                                    const CacheConfig& config, std::size_t bptt) {
  const TokenTrace trace = score_tokens(params, ids, 1, bptt, true);
  return score_with_cache(trace, config);
}

CacheGrid CacheGrid::defaults() { return {{100, 500, 2000}, {0.0, 0.05, 0.1, 0.2}, {0.3, 0.662, 1.0}}; }

CacheTuning tune_cache(const TokenTrace& trace, const CacheGrid& grid) {
  AWDLM_REQUIRE(grid.size() > 0, "tune_cache: empty grid");
  CacheGrid g = grid;
  std::sort(g.windows.begin(), g.windows.end());
  std::sort(g.lambdas.begin(), g.lambdas.end());
  std::sort(g.thetas.begin(), g.thetas.end());
  for (std::size_t w : g.windows) AWDLM_REQUIRE(w > 0, "tune_cache: window sizes must be positive");
  for (double l : g.lambdas) AWDLM_REQUIRE(l >= 0.0 && l <= 1.0, "tune_cache: lambda outside [0, 1]");

  const auto probs = cache_target_probabilities(trace, g.windows, g.thetas);
  CacheTuning result;
  bool have = false;
  for (double lambda : g.lambdas) {
    for (std::size_t wi = 0; wi < g.windows.size(); ++wi) {
      for (std::size_t ti = 0; ti < g.thetas.size(); ++ti) {
        const CacheConfig cfg{g.windows[wi], lambda, g.thetas[ti]};
        const double ppl = mixed_losses(trace, probs[wi][ti], lambda).perplexity;
        result.evaluated.push_back({cfg, ppl});
        if (!have || ppl < result.perplexity) {
          result.best = cfg;
          result.perplexity = ppl;
          have = true;
        }
      }
    }
  }
  return result;
}

template <typename T>
CacheTuning tune_cache(const LMParameters<T>& params, std::span<const int> ids, const CacheGrid& grid,
                       std::size_t bptt) {
  AWDLM_REQUIRE(grid.size() > 0, "tune_cache: empty grid");
  const TokenTrace trace = score_tokens(params, ids, 1, bptt, true);
  return tune_cache(trace, grid);
}

std::vector<WordDelta> word_loss_diff(std::span<const double> losses_base, std::span<const double> losses_cache,
                                      std::span<const int> targets, const Vocabulary& vocab) {
  AWDLM_REQUIRE(losses_base.size() == losses_cache.size() && losses_base.size() == targets.size(),
                "word_loss_diff: misaligned inputs (" + std::to_string(losses_base.size()) + ", " +
                    std::to_string(losses_cache.size()) + ", " + std::to_string(targets.size()) + ")");
  std::map<int, WordDelta> by_id;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    auto& d = by_id[targets[i]];
    d.count += 1;
    d.delta += losses_base[i] - losses_cache[i];
  }
  std::vector<WordDelta> out;
  out.reserve(by_id.size());
  for (auto& [id, d] : by_id) {
    d.word = vocab.token(id);
    out.push_back(std::move(d));
  }
  std::sort(out.begin(), out.end(), [](const WordDelta& a, const WordDelta& b) {
    if (a.delta != b.delta) return a.delta > b.delta;
    return a.word < b.word;
  });
  return out;
}

namespace {

std::string delta_cells(const WordDelta& d) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", d.delta);
  return d.word + "\t" + std::to_string(d.count) + "\t" + buf;
}

}  // namespace

void write_delta_report(std::ostream& out, const std::vector<WordDelta>& deltas, std::size_t rows) {
  out << "word\tcount\tdelta_loss\tword\tcount\tdelta_loss\n";
  const std::size_t n = std::min(rows, deltas.size());
  for (std::size_t i = 0; i < n; ++i) {
    const WordDelta& worst = deltas[deltas.size() - 1 - i];
    const WordDelta& best = deltas[i];
    out << delta_cells(worst) << '\t' << delta_cells(best) << '\n';
  }
}

void write_delta_list(std::ostream& out, const std::vector<WordDelta>& deltas) {
  for (const auto& d : deltas) out << delta_cells(d) << '\n';
}

template CacheEvaluation evaluate_with_cache<float>(const LMParameters<float>&, std::span<const int>,
                                                    const CacheConfig&, std::size_t);
template CacheEvaluation evaluate_with_cache<double>(const LMParameters<double>&, std::span<const int>,
                                                     const CacheConfig&, std::size_t);
template CacheTuning tune_cache<float>(const LMParameters<float>&, std::span<const int>, const CacheGrid&,
                                       std::size_t);
template CacheTuning tune_cache<double>(const LMParameters<double>&, std::span<const int>, const CacheGrid&,
                                        std::size_t);

}  // namespace awdlm
