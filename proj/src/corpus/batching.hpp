// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "numerics/rng.hpp"

namespace awdlm {

// B parallel streams cut from one token sequence. Stream b holds
// ids[b * stream_length, (b + 1) * stream_length); the tail that does not
// fill a whole row is dropped.
struct BatchedCorpus {
  std::size_t streams = 0;
  std::size_t stream_length = 0;
  std::size_t source_tokens = 0;
  std::vector<int> ids;  // streams x stream_length, row-major

  int at(std::size_t stream, std::size_t t) const { return ids[stream * stream_length + t]; }
  std::size_t dropped() const { return source_tokens - streams * stream_length; }
};

BatchedCorpus batchify(std::span<const int> ids, std::size_t streams);

// One truncated-BPTT window. Tokens are stored time-major: element (b, t)
// lives at index t * batch + b, which is the row order the model uses.
struct Window {
  std::size_t batch = 0;
  std::size_t length = 0;
  std::size_t next_cursor = 0;
  std::vector<int> inputs;
  std::vector<int> targets;

  int input(std::size_t b, std::size_t t) const { return inputs[t * batch + b]; }
  int target(std::size_t b, std::size_t t) const { return targets[t * batch + b]; }
};

// Returns nullopt at epoch end (fewer than two tokens left from cursor).
// The requested length is shortened so the targets stay inside the stream.
std::optional<Window> next_window(const BatchedCorpus& corpus, std::size_t cursor, std::size_t length);

// Random-length BPTT: pick base = seq with probability full_prob, otherwise
// seq / 2, then draw round(N(base, stddev)) and clamp to [min_len, max_len].
struct BpttSchedule {
  std::size_t base = 70;
  double full_prob = 0.95;
  double stddev = 5.0;
  std::size_t min_len = 5;
  std::size_t max_len = 90;

  // Default clamps: [min(5, base), base + 4 * stddev].
  static BpttSchedule with_default_clamps(std::size_t base, double full_prob, double stddev);
  // A schedule that always yields `base`.
  static BpttSchedule fixed(std::size_t base);
  void validate() const;
};

struct BpttSample {
  std::size_t length = 0;
  bool used_full_base = true;
};

BpttSample sample_bptt_length(const BpttSchedule& schedule, Rng& rng);

// Linear scaling of the step size with the realised window length.
double rescale_lr(double base_lr, std::size_t sampled_len, std::size_t base_seq);

}  // namespace awdlm
