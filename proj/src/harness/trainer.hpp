// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "corpus/batching.hpp"
#include "harness/checkpoint.hpp"
#include "harness/config.hpp"
#include "harness/data.hpp"
#include "numerics/rng.hpp"

namespace awdlm {

using LogSink = std::function<void(const std::string& line)>;

struct RunOptions {
  std::filesystem::path output_dir;  // empty: no checkpoint files
  LogSink log;
};

// The training loop. One epoch = one pass over the batched training
// stream; validation, the averaging trigger (or, for the plain-SGD
// variant, learning-rate halving) and the metrics row happen at every
// epoch end.
//
// In the fine-tuning phase averaging is active from step 0 on the
// hot-started weights, and the same non-monotone condition ends the phase.
class Trainer {
 public:
  Trainer(const RunConfig& config, const Dataset& data);

  // Continues a run from its checkpoint. The config may differ from the
  // snapshot only in epoch budgets and corpus paths.
  static Trainer resume(const Checkpoint& ckpt, const RunConfig& config, const Dataset& data);
  // Starts fine-tuning from the model weights of a finished training run.
  static Trainer fine_tune_from(const Checkpoint& trained, const RunConfig& config, const Dataset& data);

  bool finished() const;
  MetricRow run_epoch();
  // Runs epochs until finished, logging rows and writing checkpoints.
  void run(const RunOptions& options);

  Checkpoint checkpoint() const;
  LMParameters<float> model() const;

  const std::vector<MetricRow>& metrics() const { return metrics_; }
  const TrainerState& state() const { return state_; }
  const LMParameters<float>& parameters() const { return params_; }
  const Rng& rng() const { return rng_; }
  const RunConfig& config() const { return config_; }
  bool fine_tuning() const { return phase_ == "finetune"; }

 private:
  Trainer(const RunConfig& config, const Dataset& data, const Checkpoint& ckpt);
  double validate_model() const;

  RunConfig config_;
  const Dataset* data_;
  BatchedCorpus train_;
  std::string phase_ = "train";
  LMParameters<float> params_;
  TrainerState state_;
  Rng rng_;
  std::size_t epoch_ = 0;
  double lr_ = 0.0;
  double best_valid_;
  bool stopped_ = false;
  std::vector<MetricRow> metrics_;
};

// Full training phase. Logs the effective config, then one row per epoch.
Checkpoint train(const RunConfig& config, const Dataset& data, const RunOptions& options = {});
// Fine-tuning phase from a trained checkpoint.
Checkpoint fine_tune(const Checkpoint& trained, const RunConfig& config, const Dataset& data,
                     const RunOptions& options = {});

// Perplexity of the checkpoint's model weights, all dropout off.
double evaluate(const Checkpoint& ckpt, std::span<const int> ids, std::size_t batch, std::size_t bptt);
// Same, on a corpus file that must use only words of the model vocabulary.
double evaluate(const Checkpoint& ckpt, const std::filesystem::path& corpus, std::size_t batch, std::size_t bptt);

// Parses a checkpoint's config snapshot.
RunConfig checkpoint_config(const Checkpoint& ckpt);

const std::vector<std::string>& ablation_names();
// The base config with exactly one technique disabled. "baseline" returns
// the base unchanged.
RunConfig ablation_config(const RunConfig& base, const std::string& name);

struct AblationRow {
  std::string name;
  std::size_t parameters = 0;
  double valid_ppl = 0.0;
  double test_ppl = 0.0;
};

inline constexpr const char* kAblationHeader = "model\tparameters\tvalidation\ttest";
std::string format_ablation_row(const AblationRow& row);

// Train, fine-tune (unless that is the ablated step) and score valid/test.
AblationRow run_ablation(const RunConfig& base, const std::string& name, const Dataset& data,
                         const RunOptions& options = {});

}  // namespace awdlm
