// SPDX-License-Identifier: Apache-2.0
#include "awdlm/awdlm.h"

#include <cstring>
#include <fstream>
#include <new>
#include <sstream>
#include <string>

#include "cache/cache.hpp"
#include "common/error.hpp"
#include "corpus/synthetic.hpp"
#include "harness/checkpoint.hpp"
#include "harness/config.hpp"
#include "harness/data.hpp"
#include "harness/trainer.hpp"
#include "model/inference.hpp"

struct awdlm_config {
  awdlm::RunConfig value;
};

struct awdlm_model {
  awdlm::Checkpoint ckpt;
};

namespace {

thread_local std::string g_last_error;

awdlm_status to_status(awdlm::ErrorCode code) {
  switch (code) {
    case awdlm::ErrorCode::invalid_argument: return AWDLM_ERR_INVALID_ARGUMENT;
    case awdlm::ErrorCode::io: return AWDLM_ERR_IO;
    case awdlm::ErrorCode::format: return AWDLM_ERR_FORMAT;
    case awdlm::ErrorCode::state: return AWDLM_ERR_STATE;
  }
  return AWDLM_ERR_INTERNAL;
}

template <typename F>
awdlm_status guarded(F&& body) {
  g_last_error.clear();
  try {
    return body();
  } catch (const awdlm::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return AWDLM_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return AWDLM_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return AWDLM_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (!p) awdlm::fail(awdlm::ErrorCode::invalid_argument, std::string(what) + " must not be NULL");
}

awdlm_status copy_out(const std::string& s, char* buf, size_t cap, size_t* needed) {
  if (needed) *needed = s.size() + 1;
  if (cap > 0) {
    need(buf, "buf");
    const size_t n = s.size() < cap - 1 ? s.size() : cap - 1;
    std::memcpy(buf, s.data(), n);
    buf[n] = '\0';
  }
  if (s.size() + 1 > cap) {
    g_last_error = "buffer of " + std::to_string(cap) + " bytes is too small; " + std::to_string(s.size() + 1) +
                   " needed";
    return AWDLM_ERR_BUFFER_TOO_SMALL;
  }
  return AWDLM_OK;
}

awdlm::RunOptions options(const char* output_dir, awdlm_log_fn log, void* user) {
  awdlm::RunOptions o;
  if (output_dir) o.output_dir = output_dir;
  if (log) o.log = [log, user](const std::string& line) { log(line.c_str(), user); };
  return o;
}

std::vector<int> corpus_ids(const awdlm_model* model, const char* corpus_path) {
  need(model, "model");
  need(corpus_path, "corpus_path");
  const awdlm::Vocabulary vocab(model->ckpt.vocab);
  return awdlm::encode_strict(awdlm::resolve_data_path(corpus_path), vocab);
}

awdlm::CacheConfig cache_config(const awdlm_cache_params* p) {
  need(p, "params");
  awdlm::CacheConfig c{p->window, p->lambda, p->theta};
  c.validate();
  return c;
}

awdlm_status emit_model(awdlm::Checkpoint ckpt, awdlm_model** out) {
  *out = new awdlm_model{std::move(ckpt)};
  return AWDLM_OK;
}

}  // namespace

extern "C" {

const char* awdlm_version(void) { return "0.1.0"; }

const char* awdlm_last_error(void) { return g_last_error.c_str(); }

const char* awdlm_status_string(awdlm_status status) {
  switch (status) {
    case AWDLM_OK: return "ok";
    case AWDLM_ERR_INVALID_ARGUMENT: return "invalid argument";
    case AWDLM_ERR_IO: return "i/o error";
    case AWDLM_ERR_FORMAT: return "format error";
    case AWDLM_ERR_STATE: return "invalid state";
    case AWDLM_ERR_BUFFER_TOO_SMALL: return "buffer too small";
    case AWDLM_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

awdlm_status awdlm_config_create(const char* profile, awdlm_config** out) {
  return guarded([&] {
    need(out, "out");
    *out = new awdlm_config{awdlm::profile_config(profile ? profile : "ptb")};
    return AWDLM_OK;
  });
}

void awdlm_config_destroy(awdlm_config* config) { delete config; }

awdlm_status awdlm_config_set(awdlm_config* config, const char* key, const char* value) {
  return guarded([&] {
    need(config, "config");
    need(key, "key");
    need(value, "value");
    config->value.set(key, value);
    return AWDLM_OK;
  });
}

awdlm_status awdlm_config_get(const awdlm_config* config, const char* key, char* buf, size_t cap, size_t* needed) {
  return guarded([&] {
    need(config, "config");
    need(key, "key");
    return copy_out(config->value.get(key), buf, cap, needed);
  });
}

const char* awdlm_config_keys(void) {
  static const std::string joined = [] {
    std::string s;
    for (const auto& k : awdlm::config_keys()) s += k + "\n";
    return s;
  }();
  return joined.c_str();
}

awdlm_status awdlm_config_load_file(awdlm_config* config, const char* path) {
  return guarded([&] {
    need(config, "config");
    need(path, "path");
    awdlm::apply_config_file(config->value, path);
    return AWDLM_OK;
  });
}

awdlm_status awdlm_config_dump(const awdlm_config* config, char* buf, size_t cap, size_t* needed) {
  return guarded([&] {
    need(config, "config");
    return copy_out(config->value.dump(), buf, cap, needed);
  });
}

awdlm_status awdlm_train(const awdlm_config* config, const char* output_dir, awdlm_log_fn log, void* user,
                         awdlm_model** out) {
  return guarded([&] {
    need(config, "config");
    need(out, "out");
    config->value.validate();
    const awdlm::Dataset data = awdlm::load_dataset(config->value);
    return emit_model(awdlm::train(config->value, data, options(output_dir, log, user)), out);
  });
}

awdlm_status awdlm_resume(const char* checkpoint_path, const awdlm_config* config, const char* output_dir,
                          awdlm_log_fn log, void* user, awdlm_model** out) {
  return guarded([&] {
    need(checkpoint_path, "checkpoint_path");
    need(config, "config");
    need(out, "out");
    const awdlm::Checkpoint ckpt = awdlm::load_checkpoint(checkpoint_path);
    const awdlm::Dataset data = awdlm::load_dataset(config->value);
    awdlm::Trainer t = awdlm::Trainer::resume(ckpt, config->value, data);
    t.run(options(output_dir, log, user));
    return emit_model(t.checkpoint(), out);
  });
}

awdlm_status awdlm_finetune(const awdlm_model* trained, const awdlm_config* config, const char* output_dir,
                            awdlm_log_fn log, void* user, awdlm_model** out) {
  return guarded([&] {
    need(trained, "trained");
    need(config, "config");
    need(out, "out");
    const awdlm::Dataset data = awdlm::load_dataset(config->value);
    return emit_model(awdlm::fine_tune(trained->ckpt, config->value, data, options(output_dir, log, user)), out);
  });
}

awdlm_status awdlm_model_load(const char* path, awdlm_model** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    return emit_model(awdlm::load_checkpoint(path), out);
  });
}

awdlm_status awdlm_model_save(const awdlm_model* model, const char* path) {
  return guarded([&] {
    need(model, "model");
    need(path, "path");
    awdlm::save_checkpoint(path, model->ckpt);
    return AWDLM_OK;
  });
}

void awdlm_model_destroy(awdlm_model* model) { delete model; }

awdlm_status awdlm_model_info_get(const awdlm_model* model, awdlm_model_info* info) {
  return guarded([&] {
    need(model, "model");
    need(info, "info");
    const auto& c = model->ckpt;
    info->vocab = c.params.shape.vocab;
    info->embed = c.params.shape.embed;
    info->hidden = c.params.shape.hidden;
    info->layers = c.params.shape.layers;
    info->parameters = c.params.parameter_count();
    info->epochs = c.epoch;
    info->steps = c.state.k;
    info->triggered = c.state.triggered ? 1 : 0;
    info->fine_tuned = c.phase == "finetune" ? 1 : 0;
    info->best_valid = c.best_valid;
    return AWDLM_OK;
  });
}

awdlm_status awdlm_model_config(const awdlm_model* model, awdlm_config** out) {
  return guarded([&] {
    need(model, "model");
    need(out, "out");
    *out = new awdlm_config{awdlm::checkpoint_config(model->ckpt)};
    return AWDLM_OK;
  });
}

awdlm_status awdlm_eval(const awdlm_model* model, const char* corpus_path, size_t batch, size_t bptt,
                        double* perplexity) {
  return guarded([&] {
    need(perplexity, "perplexity");
    const auto ids = corpus_ids(model, corpus_path);
    *perplexity = awdlm::evaluate(model->ckpt, ids, batch, bptt);
    return AWDLM_OK;
  });
}

awdlm_status awdlm_cache_eval(const awdlm_model* model, const char* corpus_path, const awdlm_cache_params* params,
                              size_t bptt, double* perplexity) {
  return guarded([&] {
    need(perplexity, "perplexity");
    const awdlm::CacheConfig cfg = cache_config(params);
    const auto ids = corpus_ids(model, corpus_path);
    *perplexity = awdlm::evaluate_with_cache(model->ckpt.model(), ids, cfg, bptt).perplexity;
    return AWDLM_OK;
  });
}

awdlm_status awdlm_cache_tune(const awdlm_model* model, const char* corpus_path, size_t bptt, const size_t* windows,
                              size_t n_windows, const double* lambdas, size_t n_lambdas, const double* thetas,
                              size_t n_thetas, awdlm_cache_params* best, double* best_perplexity,
                              double* baseline_perplexity) {
  return guarded([&] {
    need(best, "best");
    need(best_perplexity, "best_perplexity");
    awdlm::CacheGrid grid = awdlm::CacheGrid::defaults();
    if (windows) grid.windows.assign(windows, windows + n_windows);
    if (lambdas) grid.lambdas.assign(lambdas, lambdas + n_lambdas);
    if (thetas) grid.thetas.assign(thetas, thetas + n_thetas);
    const auto ids = corpus_ids(model, corpus_path);
    const awdlm::TokenTrace trace = awdlm::score_tokens(model->ckpt.model(), ids, 1, bptt, true);
    const awdlm::CacheTuning tuned = awdlm::tune_cache(trace, grid);
    best->window = tuned.best.window;
    best->lambda = tuned.best.lambda;
    best->theta = tuned.best.theta;
    *best_perplexity = tuned.perplexity;
    if (baseline_perplexity) *baseline_perplexity = trace.perplexity();
    return AWDLM_OK;
  });
}

awdlm_status awdlm_analyze_cache(const awdlm_model* model, const char* corpus_path, const awdlm_cache_params* params,
                                 size_t bptt, size_t rows, char* buf, size_t cap, size_t* needed) {
  return guarded([&] {
    const awdlm::CacheConfig cfg = cache_config(params);
    const auto ids = corpus_ids(model, corpus_path);
    const awdlm::TokenTrace trace = awdlm::score_tokens(model->ckpt.model(), ids, 1, bptt, true);
    const awdlm::CacheEvaluation cached = awdlm::score_with_cache(trace, cfg);
    const awdlm::Vocabulary vocab(model->ckpt.vocab);
    const auto deltas = awdlm::word_loss_diff(trace.losses, cached.losses, trace.targets, vocab);
    std::ostringstream report;
    awdlm::write_delta_report(report, deltas, rows);
    return copy_out(report.str(), buf, cap, needed);
  });
}

awdlm_status awdlm_ablate(const awdlm_config* config, const char* name, const char* output_dir, awdlm_log_fn log,
                          void* user, awdlm_ablation_row* row) {
  return guarded([&] {
    need(config, "config");
    need(name, "name");
    need(row, "row");
    awdlm::ablation_config(config->value, name);
    const awdlm::Dataset data = awdlm::load_dataset(config->value);
    const awdlm::AblationRow r = awdlm::run_ablation(config->value, name, data, options(output_dir, log, user));
    std::memset(row->name, 0, sizeof row->name);
    std::strncpy(row->name, r.name.c_str(), sizeof row->name - 1);
    row->parameters = r.parameters;
    row->valid_ppl = r.valid_ppl;
    row->test_ppl = r.test_ppl;
    return AWDLM_OK;
  });
}

const char* awdlm_ablation_names(void) {
  static const std::string joined = [] {
    std::string s;
    for (const auto& n : awdlm::ablation_names()) s += n + "\n";
    return s;
  }();
  return joined.c_str();
}

awdlm_status awdlm_synthesize(const char* kind, size_t tokens, size_t vocab, uint64_t seed, const char* path) {
  return guarded([&] {
    need(kind, "kind");
    need(path, "path");
    const std::string k = kind;
    std::string text;
    if (k == "ptb-like") {
      text = awdlm::synthesize_ptb_like(tokens, vocab, seed);
    } else if (k == "topics") {
      text = awdlm::synthesize_topic_repetition(tokens, vocab, seed);
    } else if (k == "random") {
      text = awdlm::synthesize_random_text(tokens, vocab, 10, seed);
    } else {
      awdlm::fail(awdlm::ErrorCode::invalid_argument, "unknown corpus kind '" + k + "' (ptb-like, topics, random)");
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) awdlm::fail(awdlm::ErrorCode::io, std::string("cannot write ") + path);
    out << text;
    if (!out) awdlm::fail(awdlm::ErrorCode::io, std::string("short write to ") + path);
    return AWDLM_OK;
  });
}

}  // extern "C"
