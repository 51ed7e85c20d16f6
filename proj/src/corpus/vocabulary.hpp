// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace awdlm {

inline constexpr std::string_view kEos = "<eos>";
inline constexpr std::string_view kUnk = "<unk>";

// Dense token <-> id table. Ids are assigned in first-seen order and are
// always [0, size()).
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> tokens);

  int add(std::string_view token);
  std::optional<int> find(std::string_view token) const;
  // Out-of-vocabulary tokens map to <unk>.
  int id_or_unk(std::string_view token) const;
  const std::string& token(int id) const;

  std::size_t size() const noexcept { return tokens_.size(); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  int eos() const;
  int unk() const;

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

  // One token per line; the line number is the id.
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

// Whitespace tokenization with <eos> appended after every line.
std::vector<std::string> read_tokens(std::istream& in);

// Builds a vocabulary over the stream, guaranteeing <eos> and <unk>. With
// max_words > 0 only the max_words most frequent tokens (ties broken by first
// occurrence) are kept; the rest fall to <unk>.
Vocabulary build_vocab(std::istream& in, std::size_t max_words = 0);
Vocabulary build_vocab(const std::vector<std::string>& tokens, std::size_t max_words = 0);

std::vector<int> encode(const std::vector<std::string>& tokens, const Vocabulary& vocab);
std::vector<int> encode(std::istream& in, const Vocabulary& vocab);

std::vector<std::string> read_token_file(const std::filesystem::path& path);

}  // namespace awdlm
