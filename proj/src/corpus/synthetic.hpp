// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace awdlm {

// Generators for self-contained test corpora. All return PTB-style text:
// lower-case whitespace-separated tokens, one sentence per line, with
// "<unk>" and "N" appearing as ordinary tokens.

// Sentences from a hidden class-transition chain with Zipfian word choice
// inside each class, so there is real sequential structure to learn.
std::string synthesize_ptb_like(std::size_t tokens, std::size_t vocab_words, std::uint64_t seed);

// Filler text where each paragraph repeatedly mentions one "topic" word
// drawn from a large pool. A global LM cannot know the topic; a cache can.
std::string synthesize_topic_repetition(std::size_t tokens, std::size_t topics, std::uint64_t seed);

// Uniformly random words from a small vocabulary, fixed line length.
std::string synthesize_random_text(std::size_t tokens, std::size_t vocab_words, std::size_t line_length,
                                   std::uint64_t seed);

}  // namespace awdlm
