#ifndef ATM_KIT_H
#define ATM_KIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Operators available through [`atm_apply`].
 */
typedef enum AtmOperator {
  ATM_OPERATOR_A = 0,
  ATM_OPERATOR_D1 = 1,
  ATM_OPERATOR_D2 = 2,
  /**
   * Upper triangular half of `A`.
   */
  ATM_OPERATOR_A1 = 3,
  /**
   * Lower triangular half of `A`, the adjoint of `A1`.
   */
  ATM_OPERATOR_A2 = 4,
  /**
   * `(E + sigma tau A1)(E + sigma tau A2)`
   */
  ATM_OPERATOR_B = 5,
  /**
   * `(E + sigma tau^2 A1)(E + sigma tau^2 A2)`
   */
  ATM_OPERATOR_G_HYPERBOLIC = 6,
  /**
   * Energy operator of the wave scheme.
   */
  ATM_OPERATOR_R_HYPERBOLIC = 7,
  /**
   * `E + sigma tau A`
   */
  ATM_OPERATOR_C = 8,
  /**
   * Energy operator of the three-level parabolic scheme.
   */
  ATM_OPERATOR_R_MULTILEVEL = 9,
} AtmOperator;

typedef enum AtmSchemeKind {
  ATM_SCHEME_KIND_EXPLICIT = 0,
  ATM_SCHEME_KIND_ATM = 1,
  ATM_SCHEME_KIND_MLATM = 2,
  ATM_SCHEME_KIND_HYPERBOLIC_ATM = 3,
} AtmSchemeKind;

typedef enum AtmStatus {
  ATM_STATUS_OK = 0,
  ATM_STATUS_NULL_POINTER = 1,
  ATM_STATUS_INVALID_ARGUMENT = 2,
  ATM_STATUS_LENGTH_MISMATCH = 3,
  ATM_STATUS_NOT_CONVERGED = 4,
  ATM_STATUS_NOT_POSITIVE = 5,
  ATM_STATUS_BLOW_UP = 6,
  ATM_STATUS_PANIC = 7,
} AtmStatus;

/**
 * Opaque grid plus face-sampled coefficient.
 */
typedef struct AtmCoefficient AtmCoefficient;

/**
 * Opaque time integrator holding the current (and previous) level.
 */
typedef struct AtmIntegrator AtmIntegrator;

/**
 * `k(x1, x2)` supplied by the caller.
 */
typedef double (*AtmCoefficientFn)(double x1, double x2, void *user_data);

/**
 * `f(x1, x2, t)` supplied by the caller.
 */
typedef double (*AtmForcingFn)(double x1, double x2, double t, void *user_data);

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Short description of a status code. The string is static.
 */
const char *atm_status_message(enum AtmStatus status);

/**
 * Message of the last failed call on this thread, or an empty string after a
 * successful one. Valid until the next call into the library on this thread.
 */
const char *atm_last_error_message(void);

/**
 * Constant coefficient `k` on an `l1 x l2` rectangle with `n1 x n2` cells.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum AtmStatus atm_coefficient_constant(double l1,
                                        double l2,
                                        size_t n1,
                                        size_t n2,
                                        double k,
                                        struct AtmCoefficient **out);

/**
 * Piecewise-constant `lower`/`upper` checkerboard with `tiles x tiles` tiles.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum AtmStatus atm_coefficient_checkerboard(double l1,
                                            double l2,
                                            size_t n1,
                                            size_t n2,
                                            double lower,
                                            double upper,
                                            size_t tiles,
                                            struct AtmCoefficient **out);

/**
 * Coefficient sampled from a callback at the cell faces. The callback is
 * only invoked during this call.
 *
 * # Safety
 * `k` must be safe to call with `user_data`; `out` must be valid for writes.
 */
enum AtmStatus atm_coefficient_from_fn(double l1,
                                       double l2,
                                       size_t n1,
                                       size_t n2,
                                       AtmCoefficientFn k,
                                       void *user_data,
                                       struct AtmCoefficient **out);

/**
 * # Safety
 * `k` must be NULL or a handle from one of the constructors, not yet freed.
 */
void atm_coefficient_free(struct AtmCoefficient *k);

/**
 * Number of interior values of grid functions on the coefficient's grid,
 * or 0 for a NULL handle.
 *
 * # Safety
 * `k` must be NULL or a live handle.
 */
size_t atm_coefficient_len(const struct AtmCoefficient *k);

/**
 * `out = M y` for the operator `op`. `sigma` and `tau` are ignored by the
 * operators that do not take them.
 *
 * # Safety
 * `y` and `out` must point to `len` readable / writable doubles; they may
 * not overlap.
 */
enum AtmStatus atm_apply(const struct AtmCoefficient *k,
                         enum AtmOperator op,
                         double sigma,
                         double tau,
                         const double *y,
                         double *out,
                         size_t len);

/**
 * Solves `(E + c A1)(E + c A2) x = b` by two triangular sweeps, `c >= 0`.
 *
 * # Safety
 * `b` and `x` must point to `len` readable / writable doubles.
 */
enum AtmStatus atm_solve_factorized(const struct AtmCoefficient *k,
                                    double c,
                                    const double *b,
                                    double *x,
                                    size_t len);

/**
 * Power-iteration estimate of `||A||` to relative tolerance `tol`.
 *
 * # Safety
 * `out` must be valid for one write.
 */
enum AtmStatus atm_estimate_norm_a(const struct AtmCoefficient *k, double tol, double *out);

/**
 * Creates an integrator for `kind` with weight `sigma` and step `tau`,
 * starting from `y0` (and `v0 = du/dt(0)` for the wave scheme; NULL means
 * zero). `forcing` may be NULL for `f = 0`. The coefficient is copied.
 *
 * # Safety
 * `y0` (and `v0` if not NULL) must point to `len` doubles. `forcing`, if
 * given, is called with `user_data` during later `atm_integrator_step`
 * calls, so both must stay valid until the integrator is freed.
 */
enum AtmStatus atm_integrator_new(const struct AtmCoefficient *k,
                                  enum AtmSchemeKind kind,
                                  double sigma,
                                  double tau,
                                  const double *y0,
                                  const double *v0,
                                  size_t len,
                                  AtmForcingFn forcing,
                                  void *user_data,
                                  struct AtmIntegrator **out);

/**
 * Advances `steps` levels. Stops with `ATM_STATUS_BLOW_UP` at the first
 * non-finite or exploding level, which is not accepted.
 *
 * # Safety
 * `it` must be a live integrator handle.
 */
enum AtmStatus atm_integrator_step(struct AtmIntegrator *it, size_t steps);

/**
 * Current level `n`, or 0 for a NULL handle.
 *
 * # Safety
 * `it` must be NULL or a live handle.
 */
size_t atm_integrator_level(const struct AtmIntegrator *it);

/**
 * Current time `n tau`, or NaN for a NULL handle.
 *
 * # Safety
 * `it` must be NULL or a live handle.
 */
double atm_integrator_time(const struct AtmIntegrator *it);

/**
 * Copies the current level into `out`.
 *
 * # Safety
 * `out` must point to `len` writable doubles.
 */
enum AtmStatus atm_integrator_values(const struct AtmIntegrator *it, double *out, size_t len);

/**
 * # Safety
 * `it` must be NULL or a handle from [`atm_integrator_new`], not yet freed.
 */
void atm_integrator_free(struct AtmIntegrator *it);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ATM_KIT_H */
