// SPDX-License-Identifier: Apache-2.0
#include "corpus/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "common/error.hpp"
#include "numerics/rng.hpp"

namespace awdlm {
namespace {

std::string pseudo_word(std::size_t index) {
  static const char* const kSyllables[] = {"ka", "lo", "mi", "ne", "ru", "sa", "ti", "vo", "de", "po",
                                           "ga", "be", "zu", "fi", "ho", "ja", "ce", "wu", "xi", "yo"};
  constexpr std::size_t kCount = std::size(kSyllables);
  std::string w;
  std::size_t i = index;
  do {
    w += kSyllables[i % kCount];
    i /= kCount;
  } while (i > 0);
  return w + (index % 3 == 0 ? "n" : "");
}

std::size_t pick(Rng& rng, const std::vector<double>& cumulative) {
  const double u = rng.uniform() * cumulative.back();
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  return static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cumulative.begin(),
                                                           static_cast<std::ptrdiff_t>(cumulative.size()) - 1));
}

std::vector<double> zipf_cumulative(std::size_t n, double exponent) {
  std::vector<double> c(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += 1.0 / std::pow(static_cast<double>(i + 1), exponent);
    c[i] = acc;
  }
  return c;
}

}  // namespace

std::string synthesize_ptb_like(std::size_t tokens, std::size_t vocab_words, std::uint64_t seed) {
  AWDLM_REQUIRE(vocab_words >= 16, "synthesize_ptb_like: need at least 16 words");
  Rng rng(seed);
  constexpr std::size_t kClasses = 16;
  constexpr std::size_t kSuccessors = 3;

  // Words are dealt round-robin into classes; "N" and "<unk>" join two of them.
  std::vector<std::vector<std::string>> members(kClasses);
  for (std::size_t w = 0; w < vocab_words; ++w) members[w % kClasses].push_back(pseudo_word(w));
  members[1].insert(members[1].begin(), "N");
  members[2].insert(members[2].begin(), "<unk>");

  std::vector<std::vector<double>> word_cdf(kClasses);
  for (std::size_t c = 0; c < kClasses; ++c) word_cdf[c] = zipf_cumulative(members[c].size(), 1.1);

  std::vector<std::vector<std::size_t>> next(kClasses);
  for (std::size_t c = 0; c < kClasses; ++c)
    for (std::size_t s = 0; s < kSuccessors; ++s) next[c].push_back(rng.next_u64() % kClasses);
  const std::vector<double> successor_cdf = {0.6, 0.85, 1.0};

  std::string out;
  std::size_t emitted = 0;
  while (emitted < tokens) {
    out += ' ';
    std::size_t cls = rng.next_u64() % kClasses;
    const std::size_t length = 6 + rng.next_u64() % 18;
    for (std::size_t i = 0; i < length && emitted + 1 < tokens; ++i) {
      out += members[cls][pick(rng, word_cdf[cls])];
      out += ' ';
      ++emitted;
      cls = next[cls][pick(rng, successor_cdf)];
    }
    out += '\n';
    ++emitted;  // the line break becomes <eos>
  }
  return out;
}

std::string synthesize_topic_repetition(std::size_t tokens, std::size_t topics, std::uint64_t seed) {
  AWDLM_REQUIRE(topics >= 1, "synthesize_topic_repetition: need at least one topic");
  Rng rng(seed);
  constexpr std::size_t kFiller = 24;
  std::string out;
  std::size_t emitted = 0;
  while (emitted < tokens) {
    const std::string topic = "topic" + pseudo_word(rng.next_u64() % topics);
    for (std::size_t line = 0; line < 6 && emitted < tokens; ++line) {
      out += ' ';
      for (std::size_t i = 0; i < 9 && emitted + 1 < tokens; ++i) {
        out += rng.uniform() < 0.3 ? topic : pseudo_word(rng.next_u64() % kFiller);
        out += ' ';
        ++emitted;
      }
      out += '\n';
      ++emitted;
    }
  }
  return out;
}

std::string synthesize_random_text(std::size_t tokens, std::size_t vocab_words, std::size_t line_length,
                                   std::uint64_t seed) {
  AWDLM_REQUIRE(vocab_words >= 1 && line_length >= 1, "synthesize_random_text: empty vocabulary or line");
  Rng rng(seed);
  std::string out;
  std::size_t emitted = 0;
  while (emitted < tokens) {
    for (std::size_t i = 0; i < line_length && emitted + 1 < tokens; ++i) {
      out += pseudo_word(rng.next_u64() % vocab_words);
      out += ' ';
      ++emitted;
    }
    out += '\n';
    ++emitted;
  }
  return out;
}

}  // namespace awdlm
