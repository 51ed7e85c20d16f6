/* SPDX-License-Identifier: Apache-2.0 */
#ifndef AWDLM_AWDLM_H
#define AWDLM_AWDLM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define AWDLM_API __declspec(dllexport)
#else
#define AWDLM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum awdlm_status {
  AWDLM_OK = 0,
  AWDLM_ERR_INVALID_ARGUMENT = 1,
  AWDLM_ERR_IO = 2,
  AWDLM_ERR_FORMAT = 3,
  AWDLM_ERR_STATE = 4,
  AWDLM_ERR_BUFFER_TOO_SMALL = 5,
  AWDLM_ERR_INTERNAL = 6
} awdlm_status;

typedef struct awdlm_config awdlm_config;
/* A checkpoint held in memory: weights, vocabulary, optimizer state. */
typedef struct awdlm_model awdlm_model;

/* Receives each log line (config dump, metric rows) without a newline. */
typedef void (*awdlm_log_fn)(const char* line, void* user);

typedef struct awdlm_model_info {
  size_t vocab;
  size_t embed;
  size_t hidden;
  size_t layers;
  size_t parameters;
  size_t epochs;     /* completed epochs of the current phase */
  size_t steps;      /* SGD steps of the current phase */
  int triggered;     /* averaging active */
  int fine_tuned;
  double best_valid; /* best validation perplexity seen */
} awdlm_model_info;

typedef struct awdlm_cache_params {
  size_t window;
  double lambda;
  double theta;
} awdlm_cache_params;

typedef struct awdlm_ablation_row {
  char name[64];
  size_t parameters;
  double valid_ppl;
  double test_ppl;
} awdlm_ablation_row;

AWDLM_API const char* awdlm_version(void);
/* Message of the last failure on the calling thread; "" if none. */
AWDLM_API const char* awdlm_last_error(void);
AWDLM_API const char* awdlm_status_string(awdlm_status status);

/* profile: "ptb", "wt2", "tiny" or NULL for "ptb". */
AWDLM_API awdlm_status awdlm_config_create(const char* profile, awdlm_config** out);
AWDLM_API void awdlm_config_destroy(awdlm_config* config);
AWDLM_API awdlm_status awdlm_config_set(awdlm_config* config, const char* key, const char* value);
/* String results: *needed receives the size including the terminator;
   AWDLM_ERR_BUFFER_TOO_SMALL if it exceeds cap (buf then holds a truncated
   copy when cap > 0). */
AWDLM_API awdlm_status awdlm_config_get(const awdlm_config* config, const char* key, char* buf, size_t cap,
                                        size_t* needed);
/* Newline-separated list of every config key. */
AWDLM_API const char* awdlm_config_keys(void);
/* "key = value" lines. */
AWDLM_API awdlm_status awdlm_config_load_file(awdlm_config* config, const char* path);
AWDLM_API awdlm_status awdlm_config_dump(const awdlm_config* config, char* buf, size_t cap, size_t* needed);

/* Training phase. Checkpoints go to output_dir when it is non-NULL. */
AWDLM_API awdlm_status awdlm_train(const awdlm_config* config, const char* output_dir, awdlm_log_fn log, void* user,
                                   awdlm_model** out);
/* Continues an interrupted run (either phase) up to the config's budgets. */
AWDLM_API awdlm_status awdlm_resume(const char* checkpoint_path, const awdlm_config* config, const char* output_dir,
                                    awdlm_log_fn log, void* user, awdlm_model** out);
/* Fine-tuning phase on the trained model's averaged weights. */
AWDLM_API awdlm_status awdlm_finetune(const awdlm_model* trained, const awdlm_config* config,
                                      const char* output_dir, awdlm_log_fn log, void* user, awdlm_model** out);

AWDLM_API awdlm_status awdlm_model_load(const char* path, awdlm_model** out);
AWDLM_API awdlm_status awdlm_model_save(const awdlm_model* model, const char* path);
AWDLM_API void awdlm_model_destroy(awdlm_model* model);
AWDLM_API awdlm_status awdlm_model_info_get(const awdlm_model* model, awdlm_model_info* info);
/* Effective config the model was trained with. */
AWDLM_API awdlm_status awdlm_model_config(const awdlm_model* model, awdlm_config** out);

/* Perplexity with dropout off. Corpus words must be in the model vocabulary. */
AWDLM_API awdlm_status awdlm_eval(const awdlm_model* model, const char* corpus_path, size_t batch, size_t bptt,
                                  double* perplexity);

AWDLM_API awdlm_status awdlm_cache_eval(const awdlm_model* model, const char* corpus_path,
                                        const awdlm_cache_params* params, size_t bptt, double* perplexity);
/* Grid search; NULL arrays select the default grid for that axis. */
AWDLM_API awdlm_status awdlm_cache_tune(const awdlm_model* model, const char* corpus_path, size_t bptt,
                                        const size_t* windows, size_t n_windows, const double* lambdas,
                                        size_t n_lambdas, const double* thetas, size_t n_thetas,
                                        awdlm_cache_params* best, double* best_perplexity,
                                        double* baseline_perplexity);
/* Per-word loss change from adding the cache, as a tab-separated report
   of the `rows` most harmed and most helped words. */
AWDLM_API awdlm_status awdlm_analyze_cache(const awdlm_model* model, const char* corpus_path,
                                           const awdlm_cache_params* params, size_t bptt, size_t rows, char* buf,
                                           size_t cap, size_t* needed);

/* Runs the full protocol with one technique disabled. */
AWDLM_API awdlm_status awdlm_ablate(const awdlm_config* config, const char* name, const char* output_dir,
                                    awdlm_log_fn log, void* user, awdlm_ablation_row* row);
/* Newline-separated ablation names. */
AWDLM_API const char* awdlm_ablation_names(void);

/* kind: "ptb-like", "topics" or "random". */
AWDLM_API awdlm_status awdlm_synthesize(const char* kind, size_t tokens, size_t vocab, uint64_t seed,
                                        const char* path);

#ifdef __cplusplus
}
#endif

#endif
