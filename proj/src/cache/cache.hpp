// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <deque>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "corpus/vocabulary.hpp"
#include "model/inference.hpp"
#include "model/parameters.hpp"

namespace awdlm {

// Bounded FIFO of (final-layer output, following token) pairs.
class CacheWindow {
 public:
  struct Entry {
    std::vector<float> hidden;
    int target = 0;
  };

  explicit CacheWindow(std::size_t capacity);

  // Evicts the oldest entry when full.
  void push(std::span<const float> hidden, int target);

  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }
  bool empty() const noexcept { return entries_.empty(); }
  // 0 is the oldest entry.
  const Entry& operator[](std::size_t i) const { return entries_[i]; }

 private:
  std::size_t capacity_;
  std::deque<Entry> entries_;
};

struct CacheConfig {
  std::size_t window = 2000;
  double lambda = 0.1;  // weight of the cache distribution
  double theta = 1.0;   // flatness: scale on the dot-product scores

  void validate() const;
  bool operator==(const CacheConfig&) const = default;
};

// p(w) proportional to sum over entries with target w of
// exp(theta * <query, h_i>). nullopt for an empty window.
std::optional<std::vector<double>> cache_distribution(const CacheWindow& window, std::span<const float> query,
                                                      double theta, std::size_t vocab);

// (1 - lambda) * p_lm + lambda * p_cache; p_lm unchanged without a cache.
std::vector<double> mix(std::span<const double> p_lm, const std::optional<std::vector<double>>& p_cache,
                        double lambda);

struct CacheEvaluation {
  double perplexity = 0.0;
  std::vector<int> targets;
  std::vector<double> losses;  // -ln p_mixed(target)
};

// Applies the cache to a recorded dropout-free pass (a batch-1 trace with
// hidden states). Each position is scored first and pushed afterwards, so
// a token is never its own pointer target. lambda == 0 reproduces the
// trace's losses bit for bit.
CacheEvaluation score_with_cache(const TokenTrace& trace, const CacheConfig& config);

template <typename T>
CacheEvaluation evaluate_with_cache(const LMParameters<T>& params, std::span<const int> ids,
                                    const CacheConfig& config, std::size_t bptt);

struct CacheGrid {
  std::vector<std::size_t> windows;
  std::vector<double> lambdas;
  std::vector<double> thetas;

  static CacheGrid defaults();
  std::size_t size() const { return windows.size() * lambdas.size() * thetas.size(); }
};

struct CacheTuning {
  CacheConfig best;
  double perplexity = 0.0;
  struct Point {
    CacheConfig config;
    double perplexity;
  };
  std::vector<Point> evaluated;
};

// Exhaustive search for the lowest perplexity. Among equal perplexities the
// smaller lambda wins, then the smaller window, then the smaller theta.
CacheTuning tune_cache(const TokenTrace& trace, const CacheGrid& grid);

template <typename T>
CacheTuning tune_cache(const LMParameters<T>& params, std::span<const int> ids, const CacheGrid& grid,
                       std::size_t bptt);

struct WordDelta {
  std::string word;
  std::size_t count = 0;
  double delta = 0.0;  // sum of (loss_base - loss_cache); positive = cache helped
};

// Per-word summed loss difference, sorted by delta descending (ties by word).
std::vector<WordDelta> word_loss_diff(std::span<const double> losses_base, std::span<const double> losses_cache,
                                      std::span<const int> targets, const Vocabulary& vocab);

// Two-sided tab-separated table: the `rows` most harmed words (most negative
// first) beside the `rows` most helped (most positive first).
void write_delta_report(std::ostream& out, const std::vector<WordDelta>& deltas, std::size_t rows = 20);

// Full list, one "word<TAB>count<TAB>delta" line per word, descending.
void write_delta_list(std::ostream& out, const std::vector<WordDelta>& deltas);

}  // namespace awdlm
