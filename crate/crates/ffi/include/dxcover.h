#ifndef DXCOVER_H
#define DXCOVER_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DxStatus {
  DX_STATUS_OK = 0,
  DX_STATUS_NULL_POINTER = 1,
  DX_STATUS_INVALID_UTF8 = 2,
  DX_STATUS_INVALID_ARGUMENT = 3,
  DX_STATUS_IO = 4,
  DX_STATUS_PARSE = 5,
  DX_STATUS_MODEL = 6,
  DX_STATUS_PANIC = 7,
} DxStatus;

/**
 * Symptom matcher and negation rules over one universe.
 */
typedef struct DxExtractor DxExtractor;

/**
 * A loaded model together with the universe it was trained on.
 */
typedef struct DxModel DxModel;

/**
 * Result of an OLS slope fit.
 */
typedef struct DxSlopeFit {
  double beta_d;
  double beta_m;
  double std_err;
  double t_value;
  double p_value;
  size_t n_points;
} DxSlopeFit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *dx_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *dx_version(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void dx_string_free(char *s);

/**
 * Loads a model artifact. The universe is rebuilt from the symptom list
 * stored in the artifact.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum DxStatus dx_model_load(const char *path, struct DxModel **out);

/**
 * Releases a model. Null is ignored.
 *
 * # Safety
 * `model` must come from [`dx_model_load`] and not have been freed.
 */
void dx_model_free(struct DxModel *model);

/**
 * Number of diagnosis labels; 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t dx_model_n_labels(const struct DxModel *model);

/**
 * Label `index`, borrowed from the handle; null when out of range.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
const char *dx_model_label(const struct DxModel *model, size_t index);

/**
 * Class probabilities for a feature vector given as active indices into the
 * `2K` input (`i` = symptom `i` present, `K + i` = absent). Writes
 * `dx_model_n_labels` values into `probs`.
 *
 * # Safety
 * `active` must hold `n_active` values; `probs` must hold `probs_len`.
 */
enum DxStatus dx_model_predict(const struct DxModel *model,
                               const uint32_t *active,
                               size_t n_active,
                               double *probs,
                               size_t probs_len);

/**
 * Ranks diagnoses for findings given as a JSON array of
 * `{"symptom": ..., "polarity": "present"|"absent"}`. Symptoms outside the
 * model's universe are ignored. Writes a JSON array of the best `k`
 * `{"label": ..., "probability": ...}` objects to `out_json`.
 *
 * # Safety
 * `findings_json` must be a NUL-terminated string; `out_json` must be
 * writable.
 */
enum DxStatus dx_model_rank_json(const struct DxModel *model,
                                 const char *findings_json,
                                 size_t k,
                                 char **out_json);

/**
 * Builds a finding extractor with the default negation rules over the
 * symptom universe stored at `universe_path` (JSON).
 *
 * # Safety
 * `universe_path` must be a NUL-terminated string; `out` must be writable.
 */
enum DxStatus dx_extractor_new(const char *universe_path, struct DxExtractor **out);

/**
 * Releases an extractor. Null is ignored.
 *
 * # Safety
 * `extractor` must come from [`dx_extractor_new`] and not have been freed.
 */
void dx_extractor_free(struct DxExtractor *extractor);

/**
 * Extracts findings from a clinical note as a JSON array of
 * `{"symptom", "polarity"}` objects.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out_json` must be writable.
 */
enum DxStatus dx_extract_findings_json(const struct DxExtractor *extractor,
                                       const char *text,
                                       char **out_json);

/**
 * OLS fit of `y = beta_d * x + beta_m` with the two-sided p-value of the
 * slope.
 *
 * # Safety
 * `x` and `y` must each hold `n` values; `out` must be writable.
 */
enum DxStatus dx_fit_slope(const double *x, const double *y, size_t n, struct DxSlopeFit *out);

/**
 * Top-`k` accuracy of `n_cases` rankings stored row-major in `ranked`
 * (`n_cases * n_labels` label indices, best first) against `gold`.
 *
 * # Safety
 * `ranked` must hold `n_cases * n_labels` values and `gold` `n_cases`;
 * `out` must be writable.
 */
enum DxStatus dx_top_k_accuracy(const uint32_t *ranked,
                                const uint32_t *gold,
                                size_t n_cases,
                                size_t n_labels,
                                size_t k,
                                double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DXCOVER_H */
