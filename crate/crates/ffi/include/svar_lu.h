#ifndef SVAR_LU_H
#define SVAR_LU_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SvarStatus {
  SVAR_STATUS_OK = 0,
  SVAR_STATUS_NULL_POINTER = 1,
  /**
   * Invalid dimensions, selection or settings.
   */
  SVAR_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Singular minors, singular designs, degenerate variances and similar.
   */
  SVAR_STATUS_NUMERICAL = 3,
  SVAR_STATUS_BUFFER_TOO_SMALL = 4,
  SVAR_STATUS_PANIC = 5,
} SvarStatus;

typedef enum SvarMatrix {
  /**
   * `k × r` reduced-form coefficients.
   */
  SVAR_MATRIX_B_HAT = 0,
  SVAR_MATRIX_SIGMA_HAT = 1,
  /**
   * `k r × k r`.
   */
  SVAR_MATRIX_SIGMA_B = 2,
  SVAR_MATRIX_Q_HAT = 3,
  SVAR_MATRIX_A0_HAT = 4,
  SVAR_MATRIX_A_HAT = 5,
  SVAR_MATRIX_SIGMA1 = 6,
  SVAR_MATRIX_SIGMA2 = 7,
  SVAR_MATRIX_SIGMA3 = 8,
} SvarMatrix;

typedef enum SvarStatistic {
  SVAR_STATISTIC_Z1 = 1,
  SVAR_STATISTIC_Z2 = 2,
  SVAR_STATISTIC_Z3 = 3,
} SvarStatistic;

typedef enum SvarResponse {
  SVAR_RESPONSE_PSI = 0,
  /**
   * `Ψ_h Q`.
   */
  SVAR_RESPONSE_PSI_O = 1,
  /**
   * `Ψ_h L̃`.
   */
  SVAR_RESPONSE_OIRF = 2,
  SVAR_RESPONSE_PSI_LOWER = 3,
  SVAR_RESPONSE_PSI_UPPER = 4,
  SVAR_RESPONSE_PSI_O_LOWER = 5,
  SVAR_RESPONSE_PSI_O_UPPER = 6,
} SvarResponse;

/**
 * Impulse responses and bands of a model.
 */
typedef struct SvarIrf SvarIrf;

/**
 * A fitted model.
 */
typedef struct SvarModel SvarModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Fits a VAR(`p`) with intercept to `n_rows × k` row-major observations
 * and identifies it from the 1-based column selection `jtuple` (length `k`).
 *
 * # Safety
 * `data` must point to `n_rows * k` doubles, `jtuple` to `k` values and
 * `out` to writable storage for one pointer.
 */
enum SvarStatus svar_model_fit(const double *data,
                               size_t n_rows,
                               size_t k,
                               size_t p,
                               const size_t *jtuple,
                               struct SvarModel **out);

/**
 * # Safety
 * `model` must be null or a pointer from [`svar_model_fit`] not yet freed.
 */
void svar_model_free(struct SvarModel *model);

/**
 * Reports the number of series, the lag order and the effective sample size.
 *
 * # Safety
 * `model` must be a live handle; each output pointer may be null.
 */
enum SvarStatus svar_model_dims(const struct SvarModel *model, size_t *k, size_t *p, size_t *t_obs);

/**
 * Copies one estimated matrix row-major into `out`. With `out` null and
 * `len` zero only the shape is reported.
 *
 * # Safety
 * `model` must be a live handle and `out` must hold `len` doubles.
 */
enum SvarStatus svar_model_matrix(const struct SvarModel *model,
                                  enum SvarMatrix which,
                                  double *out,
                                  size_t len,
                                  size_t *rows,
                                  size_t *cols);

/**
 * Test of `A₀ = O` with weight `v` of length `k(k−1)/2`; a null `weight`
 * means all ones. Writes the statistic and its two-sided p-value.
 *
 * # Safety
 * `model` must be a live handle, `weight` null or `weight_len` doubles,
 * and `z`/`p_value` null or writable.
 */
enum SvarStatus svar_model_test(const struct SvarModel *model,
                                enum SvarStatistic statistic,
                                const double *weight,
                                size_t weight_len,
                                double *z,
                                double *p_value);

/**
 * Responses for horizons `0..=h_max` with pointwise bands at `level`.
 *
 * # Safety
 * `model` must be a live handle and `out` writable.
 */
enum SvarStatus svar_irf_compute(const struct SvarModel *model,
                                 size_t h_max,
                                 double level,
                                 struct SvarIrf **out);

/**
 * # Safety
 * `irf` must be null or a pointer from [`svar_irf_compute`] not yet freed.
 */
void svar_irf_free(struct SvarIrf *irf);

/**
 * Copies the `k × k` response of kind `which` at horizon `h` row-major.
 *
 * # Safety
 * `irf` must be a live handle and `out` must hold `len` doubles.
 */
enum SvarStatus svar_irf_response(const struct SvarIrf *irf,
                                  size_t h,
                                  enum SvarResponse which,
                                  double *out,
                                  size_t len);

/**
 * `2 (1 − Φ(|z|))`.
 */
double svar_two_sided_p(double z);

/**
 * Copies the calling thread's last error message into `buf` (NUL
 * terminated, truncated to `len`) and returns the full length including
 * the terminator. An empty message means the last call succeeded.
 *
 * # Safety
 * `buf` must be null or hold `len` bytes.
 */
size_t svar_last_error(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *svar_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SVAR_LU_H */
