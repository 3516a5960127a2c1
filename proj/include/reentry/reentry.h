/*
 * C interface to the reentry toolkit.
 *
 * All functions return a reentry_status. On failure the message is available
 * from reentry_last_error() (thread-local) or, for pipeline calls, from
 * reentry_pipeline_last_error(). Strings returned by the library must be
 * released with reentry_string_free().
 */
#ifndef REENTRY_H
#define REENTRY_H

#include <stddef.h>
#include <stdint.h>

#if defined(REENTRY_BUILDING_LIBRARY)
#define REENTRY_API __attribute__((visibility("default")))
#else
#define REENTRY_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Values 2..4 double as CLI exit codes. */
typedef enum reentry_status {
  REENTRY_OK = 0,
  REENTRY_ERROR = 1,
  REENTRY_MISSING_INPUT = 2,
  REENTRY_BAD_CONFIG = 3,
  REENTRY_REMOTE_FAILURE = 4,
  REENTRY_INVALID_ARGUMENT = 5,
  REENTRY_PARSE_ERROR = 6,
  REENTRY_IO_ERROR = 7,
  REENTRY_INCONSISTENT = 8
} reentry_status;

typedef struct reentry_pipeline reentry_pipeline;

REENTRY_API const char* reentry_version(void);
REENTRY_API const char* reentry_last_error(void);
REENTRY_API void reentry_string_free(char* s);

/* Maps a status onto the documented process exit code (0, 1, 2, 3 or 4). */
REENTRY_API int reentry_exit_code(reentry_status status);

/* ---- pipeline ---------------------------------------------------------- */

/* overrides_json may be NULL; keys: seed, ratio, variant, out, jobs, mode. */
REENTRY_API reentry_status reentry_pipeline_open(const char* config_path,
                                                 const char* overrides_json,
                                                 reentry_pipeline** out);
/* command: ingest|label|extract|analyze|split|train|predict|evaluate|compare|report.
 * args_json may be NULL; keys: strategy, gold, pred, compare, annotations, errors. */
REENTRY_API reentry_status reentry_pipeline_run(reentry_pipeline* pipeline, const char* command,
                                                const char* args_json);
/* Newline-separated list of artifacts written by the last run; caller frees. */
REENTRY_API reentry_status reentry_pipeline_outputs(const reentry_pipeline* pipeline,
                                                    char** out);
REENTRY_API const char* reentry_pipeline_last_error(const reentry_pipeline* pipeline);
REENTRY_API void reentry_pipeline_close(reentry_pipeline* pipeline);

/* Writes a synthetic dump, lexicons and config into dir. */
REENTRY_API reentry_status reentry_synth_write(const char* dir, size_t pairs, uint64_t seed,
                                               double signal);

/* ---- text -------------------------------------------------------------- */

REENTRY_API reentry_status reentry_mask_pii(const char* text, char** out);

/* ---- statistics -------------------------------------------------------- */

typedef struct reentry_rank_sum_result {
  double u_a;
  double u_b;
  double z;
  double p;
  int exact;
} reentry_rank_sum_result;

REENTRY_API reentry_status reentry_rank_sum(const double* a, size_t n_a, const double* b,
                                            size_t n_b, reentry_rank_sum_result* out);

REENTRY_API reentry_status reentry_bonferroni(const double* p_values, size_t n, double alpha,
                                              long family_size, int* flags_out);

typedef struct reentry_mcnemar_result {
  size_t b;
  size_t c;
  double statistic;
  double p_value;
  int exact; /* 1 exact binomial, 0 chi-square, -1 degenerate */
} reentry_mcnemar_result;

REENTRY_API reentry_status reentry_mcnemar(const int* gold, const int* pred_a, const int* pred_b,
                                           size_t n, reentry_mcnemar_result* out);

REENTRY_API reentry_status reentry_cohen_kappa(const char* const* labels_a,
                                               const char* const* labels_b, size_t n,
                                               double* agreement, double* kappa);

/* Per-class precision/recall/F1 from a row-major k x k matrix (rows gold).
 * per_class_out holds 3*k doubles (P, R, F1 per class); weighted_out holds 3. */
REENTRY_API reentry_status reentry_prf(const size_t* counts, size_t k, double* per_class_out,
                                       double* weighted_out);

#ifdef __cplusplus
}
#endif

#endif /* REENTRY_H */
