// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "corpus/batching.hpp"
#include "model/masks.hpp"
#include "model/parameters.hpp"

namespace awdlm {

// Every hyperparameter of a run. Defaults are the PTB setting.
struct RunConfig {
  std::string profile = "ptb";

  std::size_t layers = 3;
  std::size_t hidden = 1150;
  std::size_t embed = 400;

  std::size_t batch = 40;
  std::size_t eval_batch = 10;
  std::size_t test_batch = 1;
  std::size_t bptt = 70;
  double bptt_std = 5.0;
  double bptt_prob = 0.95;
  bool variable_length = true;

  double dropouti = 0.4;
  double dropouth = 0.3;
  double dropout = 0.4;
  double dropoute = 0.1;
  double wdrop = 0.5;

  double alpha = 2.0;
  double beta = 1.0;
  double lr = 30.0;
  double clip = 0.25;
  double wdecay = 1.2e-6;

  std::size_t epochs = 750;
  std::size_t nonmono = 5;
  std::string optimizer = "ntasgd";  // or "sgd": halve lr instead of averaging
  std::size_t finetune_epochs = 750;
  std::uint64_t seed = 1;

  std::string train = "train.txt";
  std::string valid = "valid.txt";
  std::string test = "test.txt";
  std::size_t vocab_cap = 0;

  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  // "key = value" per line, keys sorted.
  std::string dump() const;
  std::map<std::string, std::string> to_map() const;
  void validate() const;

  DropoutRates dropout_rates() const;
  BpttSchedule bptt_schedule() const;
  ModelShape model_shape(std::size_t vocab) const;

  bool operator==(const RunConfig&) const = default;
};

const std::vector<std::string>& config_keys();

// "ptb", "wt2" or "tiny".
RunConfig profile_config(const std::string& name);

// Applies `key = value` lines; '#' starts a comment.
void apply_config_text(RunConfig& config, const std::string& text);
void apply_config_file(RunConfig& config, const std::filesystem::path& path);

// Keys whose values differ, sorted.
std::vector<std::string> config_diff(const RunConfig& a, const RunConfig& b);

// Resolves a corpus path: as given if it exists, otherwise under the
// directory named by AWDLM_DATA_DIR.
std::filesystem::path resolve_data_path(const std::string& path);

inline constexpr const char* kDataDirEnv = "AWDLM_DATA_DIR";

}  // namespace awdlm
