// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "model/parameters.hpp"
#include "optim/ntasgd.hpp"

namespace awdlm {

// One line of the per-epoch metrics log.
struct MetricRow {
  std::size_t epoch = 0;
  double train_ppl = 0.0;
  double valid_ppl = 0.0;
  double lr = 0.0;
  bool triggered = false;

  bool operator==(const MetricRow&) const = default;
};

inline constexpr const char* kMetricHeader = "epoch\ttrain_ppl\tvalid_ppl\tlr\ttriggered";
std::string format_metric_row(const MetricRow& row);

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Everything needed to resume a run exactly.
struct Checkpoint {
  std::string config;  // RunConfig::dump() of the run
  std::string phase = "train";  // "train" or "finetune"
  std::vector<std::string> vocab;
  LMParameters<float> params;
  TrainerState state;
  std::uint64_t rng_seed = 0;
  std::uint64_t rng_counter = 0;
  std::size_t epoch = 0;  // completed epochs in this phase
  double lr = 0.0;
  double best_valid = 0.0;
  bool stopped = false;
  std::vector<MetricRow> metrics;

  // Weights to evaluate with: the running average once averaging has
  // started, otherwise the current iterate.
  LMParameters<float> model() const;
};

// Layout (little-endian): "AWDLM01", u32 version, u64 payload length,
// payload, u32 CRC-32 of everything before it.
std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(std::string_view bytes);

// Writes through a temporary file and renames, so a crash never leaves a
// half-written checkpoint under the final name.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Rebuilds parameters of the given shape from tensors in
// LMParameters::tensors() order.
LMParameters<float> assemble_parameters(const ModelShape& shape, std::vector<Tensor<float>> tensors);

}  // namespace awdlm
