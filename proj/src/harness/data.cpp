// SPDX-License-Identifier: Apache-2.0
#include "harness/data.hpp"

#include <sstream>

#include "common/error.hpp"
#include "harness/config.hpp"

namespace awdlm {
namespace {

Dataset from_tokens(const std::vector<std::string>& train, const std::vector<std::string>& valid,
                    const std::vector<std::string>& test, std::size_t vocab_cap) {
  AWDLM_REQUIRE(!train.empty(), "training corpus is empty");
  std::vector<std::string> all;
  all.reserve(train.size() + valid.size() + test.size());
  all.insert(all.end(), train.begin(), train.end());
  all.insert(all.end(), valid.begin(), valid.end());
  all.insert(all.end(), test.begin(), test.end());
  Dataset d;
  d.vocab = build_vocab(all, vocab_cap);
  d.train = encode(train, d.vocab);
  d.valid = encode(valid, d.vocab);
  d.test = encode(test, d.vocab);
  return d;
}

std::vector<std::string> tokens_of(const std::string& text) {
  std::istringstream in(text);
  return read_tokens(in);
}

}  // namespace

Dataset load_dataset(const RunConfig& config) {
  const auto train = resolve_data_path(config.train);
  const auto valid = resolve_data_path(config.valid);
  const auto test = resolve_data_path(config.test);
  return from_tokens(read_token_file(train), read_token_file(valid), read_token_file(test), config.vocab_cap);
}

Dataset make_dataset(const std::string& train, const std::string& valid, const std::string& test,
                     std::size_t vocab_cap) {
  return from_tokens(tokens_of(train), tokens_of(valid), tokens_of(test), vocab_cap);
}

std::vector<int> encode_strict(const std::vector<std::string>& tokens, const Vocabulary& vocab) {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) {
    auto id = vocab.find(t);
    if (!id) fail(ErrorCode::invalid_argument, "vocabulary mismatch: '" + t + "' is not in the model vocabulary");
    ids.push_back(*id);
  }
  return ids;
}

std::vector<int> encode_strict(const std::filesystem::path& path, const Vocabulary& vocab) {
  return encode_strict(read_token_file(path), vocab);
}

}  // namespace awdlm
