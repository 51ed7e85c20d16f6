// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "corpus/vocabulary.hpp"

namespace awdlm {

struct RunConfig;

struct Dataset {
  Vocabulary vocab;
  std::vector<int> train;
  std::vector<int> valid;
  std::vector<int> test;
};

// Reads the three corpus files named by the config. The vocabulary covers
// all three splits (capped by vocab_cap). Every file is located before any
// is read.
Dataset load_dataset(const RunConfig& config);

// Same, from in-memory text.
Dataset make_dataset(const std::string& train, const std::string& valid, const std::string& test,
                     std::size_t vocab_cap = 0);

// Encodes a file against a fixed vocabulary. Unknown words are rejected.
std::vector<int> encode_strict(const std::filesystem::path& path, const Vocabulary& vocab);
std::vector<int> encode_strict(const std::vector<std::string>& tokens, const Vocabulary& vocab);

}  // namespace awdlm
