#ifndef WKB_DISPERSE_H
#define WKB_DISPERSE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes; one per library error kind.
 */
typedef enum WkbStatus {
  WKB_STATUS_OK = 0,
  WKB_STATUS_NULL_POINTER = 1,
  WKB_STATUS_INVALID_MODEL = 2,
  WKB_STATUS_INVALID_ARGUMENT = 3,
  WKB_STATUS_GRID_TOO_COARSE = 4,
  WKB_STATUS_TURNING_POINT = 5,
  WKB_STATUS_TAIL_TOO_FAT = 6,
  WKB_STATUS_NON_CONSTANT_WRONSKIAN = 7,
  WKB_STATUS_WKB_UNAVAILABLE = 8,
  WKB_STATUS_NO_CONVERGENCE = 9,
  WKB_STATUS_HYPOTHESIS_VIOLATED = 10,
  WKB_STATUS_RESOURCE_LIMIT = 11,
  WKB_STATUS_HORIZON_EXCEEDED = 12,
  WKB_STATUS_BROADENING_TOO_NARROW = 13,
  WKB_STATUS_CONFIG = 14,
  WKB_STATUS_IO = 15,
  WKB_STATUS_PANIC = 99,
} WkbStatus;

/**
 * Propagator engine handle: coarse Jost data for a fixed point set.
 */
typedef struct WkbEngine WkbEngine;

/**
 * Potential model handle.
 */
typedef struct WkbModel WkbModel;

/**
 * Finite-difference reference handle.
 */
typedef struct WkbOracle WkbOracle;

/**
 * Scattering data at one λ.
 */
typedef struct WkbScattering {
  double lambda;
  double wr_re;
  double wr_im;
  double abs_a2_minus_abs_b2;
  double unitarity_defect;
  double wr_spread;
} WkbScattering;

/**
 * Complex kernel value with its error estimate.
 */
typedef struct WkbKernelValue {
  double re;
  double im;
  double error;
} WkbKernelValue;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length, 0 if none.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t wkb_last_error(char *buf, size_t len);

/**
 * V = -c <x>^{-mu}.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum WkbStatus wkb_model_coulomb(double c, double mu, struct WkbModel **out);

/**
 * Coefficient c_left for x -> -inf, c_right for x -> +inf, logistic blend.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum WkbStatus wkb_model_anisotropic(double c_left,
                                     double c_right,
                                     double blend_width,
                                     double mu,
                                     struct WkbModel **out);

/**
 * Coulomb base plus a compact bump.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum WkbStatus wkb_model_bump(double c,
                              double bump_height,
                              double r0,
                              double mu,
                              struct WkbModel **out);

/**
 * V = -c.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum WkbStatus wkb_model_constant(double c, struct WkbModel **out);

/**
 * # Safety
 * `model` must come from a `wkb_model_*` constructor and not be used afterwards.
 */
void wkb_model_free(struct WkbModel *model);

/**
 * V(x).
 *
 * # Safety
 * Pointers must be valid.
 */
enum WkbStatus wkb_potential_eval(const struct WkbModel *model, double x, double *out);

/**
 * Wronskian and scattering identities at λ, default tolerances.
 *
 * # Safety
 * Pointers must be valid.
 */
enum WkbStatus wkb_scattering(const struct WkbModel *model,
                              double lambda,
                              struct WkbScattering *out);

/**
 * Spectral density Ẽ(λ, x, x').
 *
 * # Safety
 * Pointers must be valid.
 */
enum WkbStatus wkb_density(const struct WkbModel *model,
                           double lambda,
                           double x,
                           double xp,
                           double *out);

/**
 * Engine for the `n` points `xs`, valid for kernels whose energy cut is below `lambda_max`.
 *
 * # Safety
 * `xs` must hold `n` values; pointers must be valid.
 */
enum WkbStatus wkb_engine_new(const struct WkbModel *model,
                              const double *xs,
                              size_t n,
                              double lambda_max,
                              struct WkbEngine **out);

/**
 * K(t, xs[i], xs[j]) with its error estimate.
 *
 * # Safety
 * Pointers must be valid.
 */
enum WkbStatus wkb_engine_kernel(const struct WkbEngine *engine,
                                 double t,
                                 size_t i,
                                 size_t j,
                                 struct WkbKernelValue *out);

/**
 * # Safety
 * `engine` must come from `wkb_engine_new` and not be used afterwards.
 */
void wkb_engine_free(struct WkbEngine *engine);

/**
 * Finite-difference reference on [-L, L] with spacing h.
 *
 * # Safety
 * Pointers must be valid.
 */
enum WkbStatus wkb_oracle_new(const struct WkbModel *model,
                              double l,
                              double h,
                              struct WkbOracle **out);

/**
 * Reference kernel on the positive spectrum (no error estimate; `error` is 0).
 *
 * # Safety
 * Pointers must be valid.
 */
enum WkbStatus wkb_oracle_propagator(const struct WkbOracle *oracle,
                                     double t,
                                     double x,
                                     double xp,
                                     struct WkbKernelValue *out);

/**
 * Box-reflection horizon of the reference.
 *
 * # Safety
 * Pointers must be valid.
 */
enum WkbStatus wkb_oracle_t_safe(const struct WkbOracle *oracle, double *out);

/**
 * # Safety
 * `oracle` must come from `wkb_oracle_new` and not be used afterwards.
 */
void wkb_oracle_free(struct WkbOracle *oracle);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WKB_DISPERSE_H */
