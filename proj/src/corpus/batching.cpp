// SPDX-License-Identifier: Apache-2.0
#include "corpus/batching.hpp"

#include <algorithm>
#include <cmath>

#include "common/error.hpp"

namespace awdlm {

BatchedCorpus batchify(std::span<const int> ids, std::size_t streams) {
  AWDLM_REQUIRE(streams > 0, "batchify: stream count must be positive");
  AWDLM_REQUIRE(ids.size() >= streams, "batchify: " + std::to_string(streams) + " streams requested from only " +
                                           std::to_string(ids.size()) + " tokens");
  BatchedCorpus out;
  out.streams = streams;
  out.stream_length = ids.size() / streams;
  out.source_tokens = ids.size();
  out.ids.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(streams * out.stream_length));
  return out;
}

std::optional<Window> next_window(const BatchedCorpus& corpus, std::size_t cursor, std::size_t length) {
  AWDLM_REQUIRE(length > 0, "next_window: length must be positive");
  if (cursor + 1 >= corpus.stream_length) return std::nullopt;
  const std::size_t len = std::min(length, corpus.stream_length - 1 - cursor);
  Window w;
  w.batch = corpus.streams;
  w.length = len;
  w.next_cursor = cursor + len;
  w.inputs.resize(len * w.batch);
  w.targets.resize(len * w.batch);
  for (std::size_t t = 0; t < len; ++t) {
    for (std::size_t b = 0; b < w.batch; ++b) {
      w.inputs[t * w.batch + b] = corpus.at(b, cursor + t);
      w.targets[t * w.batch + b] = corpus.at(b, cursor + t + 1);
    }
  }
  return w;
}

BpttSchedule BpttSchedule::with_default_clamps(std::size_t base, double full_prob, double stddev) {
  BpttSchedule s;
  s.base = base;
  s.full_prob = full_prob;
  s.stddev = stddev;
  s.min_len = std::min<std::size_t>(5, base);
  s.max_len = base + static_cast<std::size_t>(std::ceil(4.0 * stddev));
  s.validate();
  return s;
}

BpttSchedule BpttSchedule::fixed(std::size_t base) {
  BpttSchedule s = with_default_clamps(base, 1.0, 0.0);
  return s;
}

void BpttSchedule::validate() const {
  AWDLM_REQUIRE(base >= 1, "bptt schedule: base length must be at least 1");
  AWDLM_REQUIRE(full_prob > 0.0 && full_prob <= 1.0,
                "bptt schedule: base probability must be in (0, 1], got " + std::to_string(full_prob));
  AWDLM_REQUIRE(stddev >= 0.0, "bptt schedule: stddev must be non-negative");
  AWDLM_REQUIRE(min_len >= 1 && min_len <= max_len,
                "bptt schedule: clamps must satisfy 1 <= min_len <= max_len");
}

BpttSample sample_bptt_length(const BpttSchedule& schedule, Rng& rng) {
  BpttSample out;
  double base = static_cast<double>(schedule.base);
  if (schedule.full_prob < 1.0) {
    out.used_full_base = rng.uniform() < schedule.full_prob;
    if (!out.used_full_base) base = static_cast<double>(schedule.base / 2);
  }
  const double draw = schedule.stddev > 0.0 ? rng.normal(base, schedule.stddev) : base;
  const double lo = static_cast<double>(schedule.min_len);
  const double hi = static_cast<double>(schedule.max_len);
  out.length = static_cast<std::size_t>(std::clamp(std::round(draw), lo, hi));
  return out;
}

double rescale_lr(double base_lr, std::size_t sampled_len, std::size_t base_seq) {
  AWDLM_REQUIRE(sampled_len >= 1 && base_seq >= 1, "rescale_lr: lengths must be positive");
  return base_lr * static_cast<double>(sampled_len) / static_cast<double>(base_seq);
}

}  // namespace awdlm
