/* SPDX-License-Identifier: Apache-2.0
 * Copyright 2026 The skws Authors
 *
 * C interface to the streaming keyword-spotting engine.
 *
 * Every fallible call returns an skws_status. On failure a description is
 * available from skws_last_error() on the same thread until the next call.
 * Strings and buffers returned through `char**` / `float**` are owned by the
 * caller and must be released with skws_buffer_free().
 */

#ifndef SKWS_SKWS_H_
#define SKWS_SKWS_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SKWS_API __declspec(dllexport)
#else
#define SKWS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum skws_status {
  SKWS_OK = 0,
  SKWS_ERR_USAGE = 1,    /* bad argument or configuration */
  SKWS_ERR_FORMAT = 2,   /* malformed file or text */
  SKWS_ERR_NUMERIC = 3,  /* non-finite values, training divergence */
  SKWS_ERR_STATE = 4,    /* call not valid in the object's current state */
  SKWS_ERR_SHAPE = 5,    /* dimension mismatch */
  SKWS_ERR_IO = 6,       /* file system failure */
  SKWS_ERR_INTERNAL = 7
} skws_status;

typedef enum skws_precision { SKWS_F32 = 0, SKWS_F64 = 1, SKWS_NATIVE = -1 } skws_precision;

typedef enum skws_verdict {
  SKWS_PENDING = 0,
  SKWS_TRIGGERED = 1,
  SKWS_CANCELLED = 2
} skws_verdict;

/* Key sets accepted by skws_config_check. */
enum { SKWS_SCOPE_MODEL = 1, SKWS_SCOPE_TRAIN = 2, SKWS_SCOPE_CORPUS = 4 };

typedef struct skws_model skws_model;
typedef struct skws_session skws_session;
typedef struct skws_corpus skws_corpus;

SKWS_API const char* skws_version(void);
SKWS_API const char* skws_last_error(void);
SKWS_API const char* skws_status_name(skws_status status);
SKWS_API void skws_buffer_free(void* buffer);

/* ---- configuration text (key=value lines, '#' comments) ---- */

SKWS_API skws_status skws_default_model_config(char** out);
SKWS_API skws_status skws_default_corpus_spec(char** out);
/* Keys in `overrides` replace those in `base`. Either may be NULL. */
SKWS_API skws_status skws_config_merge(const char* base, const char* overrides, char** out);
/* Fails with SKWS_ERR_USAGE naming the first key outside the given scopes. */
SKWS_API skws_status skws_config_check(const char* text, unsigned scopes);

/* ---- models ---- */

typedef struct skws_model_info {
  size_t feature_dim;
  size_t d_model;
  size_t n_layers;
  size_t vocab_size;
  size_t block_shift; /* 0 = full-context attention */
  size_t parameter_count;
  skws_precision precision;
} skws_model_info;

/* config_text may be NULL for the default toy model. */
SKWS_API skws_status skws_model_create(const char* config_text, uint64_t seed, skws_model** out);
/* precision SKWS_NATIVE keeps the precision stored in the checkpoint. */
SKWS_API skws_status skws_model_load(const char* path, skws_precision precision,
                                     skws_model** out);
SKWS_API skws_status skws_model_save(const skws_model* model, const char* path);
SKWS_API void skws_model_free(skws_model* model);
SKWS_API skws_status skws_model_config(const skws_model* model, char** out);
SKWS_API skws_status skws_model_info_get(const skws_model* model, skws_model_info* info);
/* Whole-utterance pass. phrase_pos_probs receives n_frames values;
 * phonetic_log_probs (optional) receives n_frames * (vocab_size + 1). */
SKWS_API skws_status skws_model_forward(const skws_model* model, const float* frames,
                                        size_t n_frames, size_t dim, double* phrase_pos_probs,
                                        double* phonetic_log_probs);

/* ---- streaming sessions ---- */

typedef struct skws_emission {
  size_t frame;
  double positive_prob;
  double smoothed_score;
  skws_verdict verdict;
} skws_emission;

typedef struct skws_session_stats {
  size_t blocks;
  size_t frames_consumed;
  size_t state_bytes;
  double block_median_seconds;
  double block_mean_seconds;
  double block_p95_seconds;
} skws_session_stats;

/* The model must outlive the session. */
SKWS_API skws_status skws_session_create(const skws_model* model, skws_session** out);
SKWS_API void skws_session_free(skws_session* session);
SKWS_API skws_status skws_session_set_policy(skws_session* session, double threshold,
                                             size_t trigger_frame);
/* Emissions produced by push/finish are queued; n_emitted (optional)
 * receives how many were added. */
SKWS_API skws_status skws_session_push(skws_session* session, const float* frames,
                                       size_t n_frames, size_t dim, size_t* n_emitted);
SKWS_API skws_status skws_session_finish(skws_session* session, size_t* n_emitted);
/* Pops up to `capacity` queued emissions. phonetic_log_probs (optional)
 * receives capacity * (vocab_size + 1) values. */
SKWS_API skws_status skws_session_drain(skws_session* session, skws_emission* out,
                                        double* phonetic_log_probs, size_t capacity,
                                        size_t* n_out);
SKWS_API skws_status skws_session_smoothed_score(const skws_session* session, double* score);
SKWS_API skws_status skws_session_decision(const skws_session* session, skws_verdict* verdict,
                                           size_t* frame);
SKWS_API skws_status skws_session_stats_get(const skws_session* session,
                                            skws_session_stats* stats);

/* ---- feature files ---- */

SKWS_API skws_status skws_features_read(const char* path, float** data, size_t* n_frames,
                                        size_t* dim);
SKWS_API skws_status skws_features_write(const char* path, const float* data, size_t n_frames,
                                         size_t dim);

/* ---- corpora ---- */

/* spec_text may be NULL for defaults; dir may be NULL to skip writing. */
SKWS_API skws_status skws_corpus_generate(const char* spec_text, const char* dir,
                                          skws_corpus** out);
SKWS_API skws_status skws_corpus_load(const char* dir, skws_corpus** out);
SKWS_API void skws_corpus_free(skws_corpus* corpus);
/* split is "train", "dev" or "test". */
SKWS_API skws_status skws_corpus_size(const skws_corpus* corpus, const char* split, size_t* n);

/* ---- training ---- */

typedef struct skws_train_options {
  size_t epochs;
  size_t batch_size;
  double lr;
  double beta1;
  double beta2;
  double eps;
  double clip_norm;
  uint64_t seed;
} skws_train_options;

typedef struct skws_epoch_metrics {
  size_t epoch;
  double ctc_loss;
  double phrase_loss;
  double phrase_acc;
  double wall_seconds;
  size_t skipped;
  const char* csv_row; /* valid during the callback only */
} skws_epoch_metrics;

typedef void (*skws_epoch_callback)(const skws_epoch_metrics* metrics, void* user);

SKWS_API void skws_train_options_default(skws_train_options* opts);
/* Reads training keys from config text on top of *opts. */
SKWS_API skws_status skws_train_options_parse(const char* config_text, skws_train_options* opts);
SKWS_API const char* skws_metrics_csv_header(void);
SKWS_API skws_status skws_train(skws_model* model, const skws_corpus* corpus,
                                const skws_train_options* opts, skws_epoch_callback callback,
                                void* user);

typedef struct skws_gradcheck_entry {
  const char* name;
  double max_rel_error;
  size_t entries;
  int passed;
} skws_gradcheck_entry;

typedef void (*skws_gradcheck_callback)(const skws_gradcheck_entry* entry, void* user);

SKWS_API skws_status skws_gradcheck(const char* config_text, uint64_t seed, double tolerance,
                                    skws_gradcheck_callback callback, void* user,
                                    int* all_passed);

/* ---- evaluation ---- */

typedef struct skws_eval_summary {
  size_t post_trigger_frames;
  size_t positives;
  size_t negatives;
  double ftr_at_1pct_frr;
  double vtd_true_accept;
  double vtd_confusable_accept;
  double vtd_random_accept;
} skws_eval_summary;

/* det_csv (optional) receives "threshold,false_trigger_rate,frr" rows. */
SKWS_API skws_status skws_eval(const skws_model* model, const skws_corpus* corpus,
                               const char* split, size_t post_trigger_frames,
                               skws_eval_summary* summary, char** det_csv);

/* CSV "mode,length,total_seconds,block_median,block_mean,block_p95,state_bytes". */
SKWS_API skws_status skws_bench(const skws_model* model, const size_t* lengths, size_t n_lengths,
                                size_t repeats, uint64_t seed, char** csv);

/* Mask grid for shift S over T frames and the streamed-vs-masked difference
 * of a random attention stack. */
SKWS_API skws_status skws_mask_report(size_t shift, size_t frames, uint64_t seed, char** grid,
                                      double* max_abs_diff);

#ifdef __cplusplus
}
#endif

#endif /* SKWS_SKWS_H_ */
