#ifndef OSGOOD_H
#define OSGOOD_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum OsgoodStatus {
  OSGOOD_STATUS_OK = 0,
  OSGOOD_STATUS_INVALID_ARGUMENT = 1,
  OSGOOD_STATUS_NULL_POINTER = 2,
  OSGOOD_STATUS_TABLE_RANGE = 3,
  OSGOOD_STATUS_ENVELOPE_BLOW_UP = 4,
  OSGOOD_STATUS_NUMERICAL = 5,
  OSGOOD_STATUS_BLOW_UP = 6,
  OSGOOD_STATUS_GEOMETRY = 7,
  OSGOOD_STATUS_CONFIG = 8,
  OSGOOD_STATUS_IO = 9,
  OSGOOD_STATUS_PANIC = 10,
} OsgoodStatus;

typedef enum OsgoodInterp {
  OSGOOD_INTERP_LINEAR = 0,
  OSGOOD_INTERP_LOG_LINEAR = 1,
  OSGOOD_INTERP_LOG_LOG = 2,
} OsgoodInterp;

typedef enum OsgoodVerdictCode {
  OSGOOD_VERDICT_CODE_DIVERGES = 0,
  OSGOOD_VERDICT_CODE_CONVERGES = 1,
  OSGOOD_VERDICT_CODE_INCONCLUSIVE = 2,
} OsgoodVerdictCode;

/**
 * Growth function behind an envelope.
 */
typedef enum OsgoodGamma {
  /**
   * `r`; ignores the multiplier.
   */
  OSGOOD_GAMMA_LINEAR = 0,
  /**
   * `r m(r)(1 + Log r)`.
   */
  OSGOOD_GAMMA_THETA = 1,
  /**
   * `m(e^r)(1 + r)`.
   */
  OSGOOD_GAMMA_TILDE = 2,
} OsgoodGamma;

typedef struct OsgoodEnvelope OsgoodEnvelope;

typedef struct OsgoodEulerSolver OsgoodEulerSolver;

typedef struct OsgoodMultiplier OsgoodMultiplier;

typedef struct OsgoodScenario OsgoodScenario;

/**
 * Radial kernel value and derivatives at one radius.
 */
typedef struct OsgoodKernelRow {
  double rho;
  double f;
  double f1;
  double f2;
  double majorant;
} OsgoodKernelRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *osgood_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *osgood_version(void);

/**
 * # Safety
 * `out` must be writable.
 */
enum OsgoodStatus osgood_multiplier_constant(double value, struct OsgoodMultiplier **out);

/**
 * # Safety
 * `exponents` must point to `len` doubles and `out` must be writable.
 */
enum OsgoodStatus osgood_multiplier_iterated_log(const double *exponents,
                                                 size_t len,
                                                 struct OsgoodMultiplier **out);

/**
 * # Safety
 * `r` and `m` must each point to `len` doubles and `out` must be writable.
 */
enum OsgoodStatus osgood_multiplier_table(const double *r,
                                          const double *m,
                                          size_t len,
                                          enum OsgoodInterp interp,
                                          struct OsgoodMultiplier **out);

/**
 * # Safety
 * `h` must be a live multiplier handle.
 */
enum OsgoodStatus osgood_multiplier_set_clamp_floor(struct OsgoodMultiplier *h, double floor);

/**
 * # Safety
 * `h` must be a live multiplier handle and `out` writable.
 */
enum OsgoodStatus osgood_multiplier_eval(const struct OsgoodMultiplier *h, double r, double *out);

/**
 * Osgood verdict for `∫ dt/(t Log t m(t))` over the default limits.
 *
 * # Safety
 * `h` must be a live multiplier handle and `out` writable.
 */
enum OsgoodStatus osgood_multiplier_osgood_verdict(const struct OsgoodMultiplier *h,
                                                   enum OsgoodVerdictCode *out);

/**
 * Radial kernel of `m(|ξ|)/|ξ|²` at `rho` in `[1e-3, 1]`, default quadrature.
 *
 * # Safety
 * `h` must be a live multiplier handle and `out` writable.
 */
enum OsgoodStatus osgood_radial_kernel(const struct OsgoodMultiplier *h,
                                       double rho,
                                       struct OsgoodKernelRow *out);

/**
 * # Safety
 * `h` must be NULL or a handle not yet freed.
 */
void osgood_multiplier_free(struct OsgoodMultiplier *h);

/**
 * Tabulates `H` from `r = lower` out to `ln r = rho_max`. `m` may be NULL for
 * the linear growth function.
 *
 * # Safety
 * `m` must be NULL or a live multiplier handle; `out` must be writable.
 */
enum OsgoodStatus osgood_envelope_new(enum OsgoodGamma gamma,
                                      const struct OsgoodMultiplier *m,
                                      double lower,
                                      double rho_max,
                                      struct OsgoodEnvelope **out);

/**
 * `ln` of `H⁻¹(H(f0) + c t f0)` at each of the `len` times, or of
 * `H⁻¹(H(f0) + c(t² + t))` when `two_term` is nonzero.
 *
 * # Safety
 * `t` and `out` must each hold `len` doubles.
 */
enum OsgoodStatus osgood_envelope_ln(const struct OsgoodEnvelope *h,
                                     double f0,
                                     double c,
                                     int32_t two_term,
                                     const double *t,
                                     size_t len,
                                     double *out);

/**
 * # Safety
 * `h` must be a live envelope handle and `out` writable.
 */
enum OsgoodStatus osgood_envelope_h(const struct OsgoodEnvelope *h, double r, double *out);

/**
 * # Safety
 * `h` must be NULL or a handle not yet freed.
 */
void osgood_envelope_free(struct OsgoodEnvelope *h);

/**
 * Solver on an `n × n` periodic grid of side `length`, started from the
 * row-major vorticity `omega[i2 * n + i1]`.
 *
 * # Safety
 * `m` must be a live multiplier handle, `omega` must hold `n * n` doubles
 * and `out` must be writable.
 */
enum OsgoodStatus osgood_euler_new(size_t n,
                                   double length,
                                   const struct OsgoodMultiplier *m,
                                   const double *omega,
                                   struct OsgoodEulerSolver **out);

/**
 * One classical RK4 step of size `dt`. On failure the solver is unchanged.
 *
 * # Safety
 * `h` must be a live solver handle.
 */
enum OsgoodStatus osgood_euler_step(struct OsgoodEulerSolver *h, double dt);

/**
 * # Safety
 * `h` must be a live solver handle and `out` writable.
 */
enum OsgoodStatus osgood_euler_time(const struct OsgoodEulerSolver *h, double *out);

/**
 * Copies the current vorticity into `out`, which must hold `len = n * n`
 * doubles.
 *
 * # Safety
 * `h` must be a live solver handle and `out` must hold `len` doubles.
 */
enum OsgoodStatus osgood_euler_vorticity(const struct OsgoodEulerSolver *h,
                                         double *out,
                                         size_t len);

/**
 * # Safety
 * `h` must be NULL or a handle not yet freed.
 */
void osgood_euler_free(struct OsgoodEulerSolver *h);

/**
 * Parses and validates scenario TOML without running it.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` writable.
 */
enum OsgoodStatus osgood_scenario_parse(const char *text, struct OsgoodScenario **out);

/**
 * Runs the scenario into `out_dir` on `threads` workers (0 for all cores).
 * `exit_code` receives 0, 3 (blow-up) or 4 (failed expectation).
 *
 * # Safety
 * `h` must be a live scenario handle, `out_dir` a NUL-terminated path and
 * `exit_code` writable.
 */
enum OsgoodStatus osgood_scenario_run(const struct OsgoodScenario *h,
                                      const char *out_dir,
                                      size_t threads,
                                      int32_t *exit_code);

/**
 * # Safety
 * `h` must be NULL or a handle not yet freed.
 */
void osgood_scenario_free(struct OsgoodScenario *h);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OSGOOD_H */
