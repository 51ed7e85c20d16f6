// SPDX-License-Identifier: Apache-2.0
#include "corpus/vocabulary.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "common/error.hpp"

namespace awdlm {

Vocabulary::Vocabulary(std::vector<std::string> tokens) {
  for (auto& t : tokens) {
    AWDLM_REQUIRE(!find(t), "vocabulary: duplicate token '" + t + "'");
    add(t);
  }
}

int Vocabulary::add(std::string_view token) {
  if (auto id = find(token)) return *id;
  const int id = static_cast<int>(tokens_.size());
  tokens_.emplace_back(token);
  ids_.emplace(tokens_.back(), id);
  return id;
}

std::optional<int> Vocabulary::find(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

int Vocabulary::id_or_unk(std::string_view token) const {
  if (auto id = find(token)) return *id;
  return unk();
}

const std::string& Vocabulary::token(int id) const {
  AWDLM_REQUIRE(id >= 0 && static_cast<std::size_t>(id) < tokens_.size(),
                "vocabulary: id " + std::to_string(id) + " out of range");
  return tokens_[static_cast<std::size_t>(id)];
}

int Vocabulary::eos() const {
  auto id = find(kEos);
  if (!id) fail(ErrorCode::state, "vocabulary has no <eos> token");
  return *id;
}

int Vocabulary::unk() const {
  auto id = find(kUnk);
  if (!id) fail(ErrorCode::state, "vocabulary has no <unk> token");
  return *id;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io, "cannot write vocabulary file " + path.string());
  for (const auto& t : tokens_) out << t << '\n';
  if (!out) fail(ErrorCode::io, "failed writing vocabulary file " + path.string());
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot read vocabulary file " + path.string());
  std::vector<std::string> tokens;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  return Vocabulary(std::move(tokens));
}

std::vector<std::string> read_tokens(std::istream& in) {
  std::vector<std::string> tokens;
  for (std::string line; std::getline(in, line);) {
    std::istringstream words(line);
    for (std::string w; words >> w;) tokens.push_back(std::move(w));
    tokens.emplace_back(kEos);
  }
  return tokens;
}

Vocabulary build_vocab(const std::vector<std::string>& tokens, std::size_t max_words) {
  AWDLM_REQUIRE(!tokens.empty(), "build_vocab: empty token stream");
  Vocabulary vocab;
  if (max_words == 0) {
    for (const auto& t : tokens) vocab.add(t);
  } else {
    std::unordered_map<std::string_view, std::pair<std::size_t, std::size_t>> stats;  // count, first
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      auto [it, inserted] = stats.try_emplace(tokens[i], 0, i);
      ++it->second.first;
    }
    std::vector<std::pair<std::string_view, std::pair<std::size_t, std::size_t>>> ranked(stats.begin(),
                                                                                         stats.end());
    std::erase_if(ranked, [](const auto& e) { return e.first == kEos || e.first == kUnk; });
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      if (a.second.first != b.second.first) return a.second.first > b.second.first;
      return a.second.second < b.second.second;
    });
    if (ranked.size() > max_words) ranked.resize(max_words);
    std::sort(ranked.begin(), ranked.end(),
              [](const auto& a, const auto& b) { return a.second.second < b.second.second; });
    std::unordered_map<std::string_view, bool> kept;
    for (const auto& e : ranked) kept.emplace(e.first, true);
    for (const auto& t : tokens)
      if (t == kEos || t == kUnk || kept.count(t)) vocab.add(t);
  }
  vocab.add(kEos);
  vocab.add(kUnk);
  return vocab;
}

Vocabulary build_vocab(std::istream& in, std::size_t max_words) {
  return build_vocab(read_tokens(in), max_words);
}

std::vector<int> encode(const std::vector<std::string>& tokens, const Vocabulary& vocab) {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(vocab.id_or_unk(t));
  return ids;
}

std::vector<int> encode(std::istream& in, const Vocabulary& vocab) {
  return encode(read_tokens(in), vocab);
}

std::vector<std::string> read_token_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot read corpus file " + path.string());
  return read_tokens(in);
}

}  // namespace awdlm
