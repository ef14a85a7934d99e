/* Copyright 2026 The adhoc-css Authors
 * License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
 *
 * C interface of the adhoc-css library. All functions return an acss_status;
 * on failure acss_last_error() describes the problem (thread-local, valid
 * until the next call on the same thread). Strings returned through char**
 * out-parameters are owned by the caller and released with acss_string_free.
 */

#ifndef ADHOC_CSS_H_
#define ADHOC_CSS_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define ACSS_API __declspec(dllexport)
#else
#define ACSS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum acss_status {
  ACSS_OK = 0,
  ACSS_ERR_INVALID_ARGUMENT = 1,
  ACSS_ERR_IO = 2,
  ACSS_ERR_CONFIG = 3,
  ACSS_ERR_NUMERIC = 4,
  ACSS_ERR_STATE = 5,
  ACSS_ERR_INTERNAL = 6
} acss_status;

typedef enum acss_head {
  ACSS_HEAD_NONE = 0, /* separation model */
  ACSS_HEAD_S1 = 1,   /* two VAD nodes */
  ACSS_HEAD_S2 = 2    /* scalar speaker count */
} acss_head;

typedef enum acss_log_level {
  ACSS_LOG_QUIET = 0,
  ACSS_LOG_WARN = 1,
  ACSS_LOG_INFO = 2,
  ACSS_LOG_DEBUG = 3
} acss_log_level;

ACSS_API const char* acss_version(void);
ACSS_API const char* acss_last_error(void);
ACSS_API const char* acss_status_string(acss_status status);
ACSS_API void acss_set_log_level(acss_log_level level);
ACSS_API void acss_string_free(char* s);

/* ---- Models ---------------------------------------------------------- */

typedef struct acss_model acss_model;

/* config_json may be NULL; otherwise a JSON object with a "model" section. */
ACSS_API acss_status acss_model_create(acss_head head, const char* config_json, uint64_t seed,
                                       acss_model** out);
ACSS_API acss_status acss_model_load(const char* path, acss_model** out);
ACSS_API acss_status acss_model_save(const acss_model* model, const char* path);
ACSS_API acss_status acss_model_head(const acss_model* model, acss_head* out);
ACSS_API acss_status acss_model_num_parameters(const acss_model* model, size_t* out);
/* Forward pass on a channels x frames x bins magnitude tensor (row-major,
 * contiguous). masks receives 2 x frames x bins values; head receives
 * frames x width values, width = 2 for s1 and 1 for s2. head may be NULL,
 * and is ignored for separation models. */
ACSS_API acss_status acss_model_forward(const acss_model* model, const double* magnitudes,
                                        size_t channels, size_t frames, size_t bins,
                                        double* masks, double* head);
ACSS_API void acss_model_free(acss_model* model);

/* ---- Recordings ------------------------------------------------------ */

typedef struct acss_recording acss_recording;

/* Reads a channel manifest (one WAV path per line). */
ACSS_API acss_status acss_recording_read(const char* manifest, acss_recording** out);
/* Copies num_channels buffers of length samples each. */
ACSS_API acss_status acss_recording_create(const double* const* channels, size_t num_channels,
                                           size_t length, int sample_rate,
                                           acss_recording** out);
ACSS_API size_t acss_recording_num_channels(const acss_recording* rec);
ACSS_API size_t acss_recording_length(const acss_recording* rec);
ACSS_API int acss_recording_sample_rate(const acss_recording* rec);
ACSS_API const double* acss_recording_channel(const acss_recording* rec, size_t channel);
ACSS_API void acss_recording_free(acss_recording* rec);

/* Estimates per-channel lags against channel 0 and returns the trimmed,
 * aligned recording. lags (may be NULL) receives num_channels values. */
ACSS_API acss_status acss_sync(const acss_recording* rec, int64_t max_lag, double score_floor,
                               int64_t* lags, acss_recording** aligned);

/* ---- Continuous separation ------------------------------------------- */

typedef struct acss_css_result acss_css_result;

typedef struct acss_css_options {
  double window_s;      /* 4.0 */
  double shift_s;       /* 2.0 */
  int count_merge;      /* 1: apply the speaker-counting gate */
  acss_head count_head; /* ACSS_HEAD_S1 */
  double vad_threshold; /* 0.5 */
  double count_threshold; /* 1.2 */
  size_t run_length;    /* 3 */
  uint64_t seed;
} acss_css_options;

ACSS_API void acss_css_options_init(acss_css_options* opts);
/* count may be NULL when opts->count_merge is 0. */
ACSS_API acss_status acss_separate(const acss_recording* rec, const acss_model* sep,
                                   const acss_model* count, const acss_css_options* opts,
                                   acss_css_result** out);
ACSS_API size_t acss_css_result_length(const acss_css_result* r);
ACSS_API const double* acss_css_result_stream(const acss_css_result* r, int stream);
ACSS_API size_t acss_css_result_num_windows(const acss_css_result* r);
/* Per-window report as line-delimited JSON. */
ACSS_API acss_status acss_css_result_report(const acss_css_result* r, char** jsonl);
ACSS_API void acss_css_result_free(acss_css_result* r);

/* ---- Metrics --------------------------------------------------------- */

ACSS_API acss_status acss_si_snr(const double* est, const double* ref, size_t length,
                                 double* out_db);

/* ---- Subcommand jobs --------------------------------------------------
 * Paths are UTF-8; optional strings may be NULL. Each job writes a
 * run_manifest sidecar next to its outputs. */

typedef struct acss_simulate_args {
  const char* config;
  const char* out_dir;
  double hours;        /* <= 0: unset */
  int64_t num_samples; /* < 0: unset */
  uint64_t seed;
} acss_simulate_args;

typedef struct acss_distort_args {
  const char* config;
  const char* input;
  const char* output;
  uint64_t seed;
} acss_distort_args;

typedef struct acss_sync_args {
  const char* config;
  const char* session;
  const char* out_dir;
  uint64_t seed;
} acss_sync_args;

typedef struct acss_train_args {
  const char* config;
  const char* train_manifest;
  const char* val_manifest;
  const char* out_dir;
  acss_head head;  /* ACSS_HEAD_NONE trains the separation model */
  int64_t epochs;  /* < 0: from config */
  uint64_t seed;
} acss_train_args;

typedef struct acss_separate_args {
  const char* config;
  const char* session; /* channel manifest of one session */
  const char* corpus;  /* or a simulate manifest.jsonl: one output dir per id */
  const char* sep_ckpt;
  const char* count_ckpt;
  acss_head count_head;
  int count_merge;
  int align;
  const char* out_dir;
  uint64_t seed;
} acss_separate_args;

typedef struct acss_count_args {
  const char* config;
  const char* session;
  const char* count_ckpt;
  acss_head count_head;
  const char* output;
  uint64_t seed;
} acss_count_args;

typedef struct acss_evaluate_args {
  const char* hyp_dir;
  const char* ref_manifest;
  const char* output; /* NULL: <hyp_dir>/eval.jsonl */
} acss_evaluate_args;

ACSS_API acss_status acss_run_simulate(const acss_simulate_args* args);
ACSS_API acss_status acss_run_distort(const acss_distort_args* args);
ACSS_API acss_status acss_run_sync(const acss_sync_args* args);
ACSS_API acss_status acss_run_train(const acss_train_args* args);
ACSS_API acss_status acss_run_separate(const acss_separate_args* args);
ACSS_API acss_status acss_run_count(const acss_count_args* args);
/* summary (may be NULL) receives a human-readable report. */
ACSS_API acss_status acss_run_evaluate(const acss_evaluate_args* args, char** summary);

#ifdef __cplusplus
}
#endif

#endif /* ADHOC_CSS_H_ */
