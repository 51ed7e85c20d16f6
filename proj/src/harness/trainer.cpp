// SPDX-License-Identifier: Apache-2.0
#include "harness/trainer.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "common/error.hpp"
#include "model/inference.hpp"
#include "model/network.hpp"
#include "optim/sgd.hpp"

namespace awdlm {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<const Tensor<float>*> const_view(const std::vector<Tensor<float>*>& ptrs) {
  return {ptrs.begin(), ptrs.end()};
}

void check_data(const RunConfig& config, const Dataset& data) {
  AWDLM_REQUIRE(data.train.size() >= 2 * config.batch,
                "training corpus too short: " + std::to_string(data.train.size()) + " tokens for batch " +
                    std::to_string(config.batch));
  AWDLM_REQUIRE(data.valid.size() >= 2 * config.eval_batch,
                "validation corpus too short: " + std::to_string(data.valid.size()) + " tokens for batch " +
                    std::to_string(config.eval_batch));
}

void check_compatible(const RunConfig& snapshot, const RunConfig& config) {
  static const std::vector<std::string> free_keys = {"epochs", "finetune_epochs", "train", "valid", "test"};
  std::string bad;
  for (const auto& key : config_diff(snapshot, config))
    if (std::find(free_keys.begin(), free_keys.end(), key) == free_keys.end()) bad += (bad.empty() ? "" : ", ") + key;
  if (!bad.empty()) fail(ErrorCode::state, "config differs from the checkpoint in: " + bad);
}

// Fine-tuning may change any training hyperparameter but not the network.
void check_same_architecture(const RunConfig& snapshot, const RunConfig& config) {
  std::string bad;
  for (const char* key : {"layers", "hidden", "embed"})
    if (snapshot.get(key) != config.get(key)) bad += (bad.empty() ? "" : ", ") + std::string(key);
  if (!bad.empty()) fail(ErrorCode::state, "fine-tuning config changes the architecture: " + bad);
}

void write_if(const RunOptions& options, const std::string& name, const Checkpoint& ckpt) {
  if (options.output_dir.empty()) return;
  std::filesystem::create_directories(options.output_dir);
  save_checkpoint(options.output_dir / name, ckpt);
}

void log_config(const RunOptions& options, const RunConfig& config) {
  if (!options.log) return;
  std::istringstream in(config.dump());
  for (std::string line; std::getline(in, line);) options.log("# " + line);
}

std::string normalize(std::string name) {
  for (char& c : name) c = c == '/' || c == '_' ? '-' : static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (name == "ntasgd" || name == "nt-asgd-sgd" || name == "sgd") return "nt-asgd";
  if (name == "artar" || name == "ar-and-tar") return "ar-tar";
  if (name == "finetuning" || name == "finetune") return "fine-tuning";
  if (name == "weight-drop" || name == "wdrop") return "weight-dropping";
  return name;
}

}  // namespace

Trainer::Trainer(const RunConfig& config, const Dataset& data)
    : config_(config), data_(&data), rng_(config.seed), lr_(config.lr), best_valid_(kInf) {
  config_.validate();
  check_data(config_, data);
  train_ = batchify(data.train, config_.batch);
  params_ = init_parameters<float>(config_.model_shape(data.vocab.size()), rng_);
  params_.set_requires_grad(true);
}

Trainer::Trainer(const RunConfig& config, const Dataset& data, const Checkpoint& ckpt)
    : config_(config),
      data_(&data),
      phase_(ckpt.phase),
      params_(ckpt.params),
      state_(ckpt.state),
      rng_(ckpt.rng_seed, ckpt.rng_counter),
      epoch_(ckpt.epoch),
      lr_(ckpt.lr),
      best_valid_(ckpt.best_valid),
      stopped_(ckpt.stopped),
      metrics_(ckpt.metrics) {
  config_.validate();
  check_compatible(checkpoint_config(ckpt), config_);
  if (ckpt.vocab != data.vocab.tokens())
    fail(ErrorCode::invalid_argument, "vocabulary mismatch: the corpus vocabulary differs from the checkpoint's");
  check_data(config_, data);
  train_ = batchify(data.train, config_.batch);
  params_.set_requires_grad(true);
}

Trainer Trainer::resume(const Checkpoint& ckpt, const RunConfig& config, const Dataset& data) {
  return Trainer(config, data, ckpt);
}

Trainer Trainer::fine_tune_from(const Checkpoint& trained, const RunConfig& config, const Dataset& data) {
  check_same_architecture(checkpoint_config(trained), config);
  Checkpoint start = trained;
  start.config = config.dump();
  start.phase = "finetune";
  start.params = trained.model();
  start.state = TrainerState{};
  start.epoch = 0;
  start.lr = config.lr;
  start.best_valid = kInf;
  start.stopped = false;
  start.metrics.clear();
  Trainer t(config, data, start);
  auto ptrs = t.params_.tensors();
  force_trigger<float>(t.state_, const_view(ptrs));
  return t;
}

bool Trainer::finished() const {
  if (phase_ == "finetune") return stopped_ || epoch_ >= config_.finetune_epochs;
  return epoch_ >= config_.epochs;
}

double Trainer::validate_model() const {
  const LMParameters<float> m = model();
  return evaluate_perplexity(m, data_->valid, config_.eval_batch, config_.bptt);
}

MetricRow Trainer::run_epoch() {
  if (finished()) fail(ErrorCode::state, "run_epoch: the epoch budget is exhausted");
  const ModelShape shape = params_.shape;
  const DropoutRates rates = config_.dropout_rates();
  const BpttSchedule schedule = config_.bptt_schedule();
  const auto ptrs = params_.tensors();
  const auto cptrs = const_view(ptrs);

  HiddenState<float> hidden = initial_state<float>(shape, config_.batch);
  double ce_sum = 0.0;
  std::size_t tokens = 0;
  for (std::size_t cursor = 0;;) {
    const BpttSample sample = sample_bptt_length(schedule, rng_);
    auto window = next_window(train_, cursor, sample.length);
    if (!window) break;
    const double step_lr = rescale_lr(lr_, window->length, config_.bptt);
    const MaskSet<float> masks = sample_masks<float>(shape, rates, config_.batch, rng_);

    Tape<float> tape;
    const BoundParameters bound = bind_parameters(tape, params_);
    ForwardResult<float> fwd = forward<float>(tape, bound, &masks, window->inputs, config_.batch, hidden);
    const LossTerms loss = language_model_loss(tape, fwd, window->targets, config_.alpha, config_.beta);
    tape.backward(loss.total);
    ce_sum += static_cast<double>(tape.value(loss.cross_entropy)[0]) * static_cast<double>(window->targets.size());
    tokens += window->targets.size();

    clip_global_norm<float>(ptrs, config_.clip);
    sgd_step<float>(ptrs, step_lr, config_.wdecay);
    record_step<float>(state_, cptrs);

    hidden = std::move(fwd.state);
    cursor = window->next_cursor;
  }

  epoch_ += 1;
  const double v = validate_model();
  if (phase_ == "finetune") {
    if (nonmonotone_condition(state_.logs, v, config_.nonmono)) {
      stopped_ = true;
    } else {
      state_.logs.push_back(v);
      state_.t += 1;
    }
  } else if (config_.optimizer == "sgd") {
    if (nonmonotone_condition(state_.logs, v, config_.nonmono)) {
      lr_ *= 0.5;
      state_.logs.clear();
    }
    state_.logs.push_back(v);
    state_.t = state_.logs.size();
  } else if (!state_.triggered) {
    nt_asgd_check<float>(state_, v, config_.nonmono, cptrs);
  }

  MetricRow row;
  row.epoch = epoch_;
  row.train_ppl = tokens ? std::exp(ce_sum / static_cast<double>(tokens)) : 0.0;
  row.valid_ppl = v;
  row.lr = lr_;
  row.triggered = state_.triggered;
  metrics_.push_back(row);
  best_valid_ = std::min(best_valid_, v);
  return row;
}

void Trainer::run(const RunOptions& options) {
  const std::string prefix = phase_ == "finetune" ? "finetune_" : "";
  if (options.log) options.log(kMetricHeader);
  while (!finished()) {
    const double best_before = best_valid_;
    const MetricRow row = run_epoch();
    if (options.log) options.log(format_metric_row(row));
    if (options.output_dir.empty()) continue;
    const Checkpoint ckpt = checkpoint();
    if (row.valid_ppl < best_before) write_if(options, prefix + "best.ckpt", ckpt);
    write_if(options, prefix + "final.ckpt", ckpt);
  }
  if (options.log && phase_ == "finetune" && stopped_)
    options.log("# fine-tuning stopped by the non-monotone criterion after epoch " + std::to_string(epoch_));
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint c;
  c.config = config_.dump();
  c.phase = phase_;
  c.vocab = data_->vocab.tokens();
  c.params = params_;
  c.params.set_requires_grad(false);
  c.state = state_;
  c.rng_seed = rng_.seed();
  c.rng_counter = rng_.counter();
  c.epoch = epoch_;
  c.lr = lr_;
  c.best_valid = best_valid_;
  c.stopped = stopped_;
  c.metrics = metrics_;
  return c;
}

LMParameters<float> Trainer::model() const {
  const auto ptrs = params_.tensors();
  AveragedIterate<float> avg = finalize<float>(state_, ptrs);
  return assemble_parameters(params_.shape, std::move(avg.tensors));
}

Checkpoint train(const RunConfig& config, const Dataset& data, const RunOptions& options) {
  log_config(options, config);
  Trainer t(config, data);
  t.run(options);
  return t.checkpoint();
}

Checkpoint fine_tune(const Checkpoint& trained, const RunConfig& config, const Dataset& data,
                     const RunOptions& options) {
  Trainer t = Trainer::fine_tune_from(trained, config, data);
  t.run(options);
  return t.checkpoint();
}

double evaluate(const Checkpoint& ckpt, std::span<const int> ids, std::size_t batch, std::size_t bptt) {
  return evaluate_perplexity(ckpt.model(), ids, batch, bptt);
}

double evaluate(const Checkpoint& ckpt, const std::filesystem::path& corpus, std::size_t batch, std::size_t bptt) {
  const Vocabulary vocab(ckpt.vocab);
  const std::vector<int> ids = encode_strict(corpus, vocab);
  return evaluate(ckpt, ids, batch, bptt);
}

RunConfig checkpoint_config(const Checkpoint& ckpt) {
  RunConfig c;
  apply_config_text(c, ckpt.config);
  return c;
}

const std::vector<std::string>& ablation_names() {
  static const std::vector<std::string> names = {
      "baseline",          "fine-tuning", "nt-asgd", "variable-lengths", "embedding-dropout", "weight-decay",
      "ar-tar", "full-sized-embedding", "weight-dropping"};
  return names;
}

RunConfig ablation_config(const RunConfig& base, const std::string& name) {
  const std::string n = normalize(name);
  RunConfig c = base;
  if (n == "baseline") {
  } else if (n == "fine-tuning") {
    c.finetune_epochs = 0;
  } else if (n == "nt-asgd") {
    c.optimizer = "sgd";
  } else if (n == "variable-lengths") {
    c.variable_length = false;
  } else if (n == "embedding-dropout") {
    c.dropoute = 0.0;
  } else if (n == "weight-decay") {
    c.wdecay = 0.0;
  } else if (n == "ar-tar") {
    c.alpha = 0.0;
    c.beta = 0.0;
  } else if (n == "full-sized-embedding") {
    c.embed = c.hidden;
  } else if (n == "weight-dropping") {
    c.wdrop = 0.0;
  } else {
    std::string known;
    for (const auto& k : ablation_names()) known += (known.empty() ? "" : ", ") + k;
    fail(ErrorCode::invalid_argument, "unknown ablation '" + name + "' (valid: " + known + ")");
  }
  return c;
}

std::string format_ablation_row(const AblationRow& row) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "\t%zu\t%.2f\t%.2f", row.parameters, row.valid_ppl, row.test_ppl);
  return (row.name == "baseline" ? std::string("baseline") : "-- " + row.name) + buf;
}

AblationRow run_ablation(const RunConfig& base, const std::string& name, const Dataset& data,
                         const RunOptions& options) {
  const RunConfig config = ablation_config(base, name);
  if (options.log) {
    std::string changed;
    for (const auto& k : config_diff(base, config)) changed += (changed.empty() ? "" : ", ") + k;
    options.log("# ablation " + normalize(name) + ": changed keys [" + changed + "]");
  }
  Checkpoint ckpt = train(config, data, options);
  if (config.finetune_epochs > 0) ckpt = fine_tune(ckpt, config, data, options);
  AblationRow row;
  row.name = normalize(name);
  row.parameters = ckpt.params.parameter_count();
  row.valid_ppl = evaluate(ckpt, data.valid, config.eval_batch, config.bptt);
  row.test_ppl = data.test.empty() ? 0.0 : evaluate(ckpt, data.test, config.test_batch, config.bptt);
  return row;
}

}  // namespace awdlm
