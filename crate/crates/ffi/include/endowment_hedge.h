#ifndef ENDOWMENT_HEDGE_H
#define ENDOWMENT_HEDGE_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum EhStatus {
  EH_STATUS_OK = 0,
  EH_STATUS_NULL_POINTER = 1,
  /**
   * A model parameter violates its constraints.
   */
  EH_STATUS_INVALID_PARAMETER = 2,
  /**
   * A solve produced values outside their admissible bounds.
   */
  EH_STATUS_NUMERICAL = 3,
  /**
   * A lookup fell outside the solved domain.
   */
  EH_STATUS_OUT_OF_DOMAIN = 4,
  EH_STATUS_INVALID_ARGUMENT = 5,
  EH_STATUS_PANIC = 6,
} EhStatus;

/**
 * A validated model.
 */
typedef struct EhModel EhModel;

/**
 * A solved price surface.
 */
typedef struct EhSurface EhSurface;

/**
 * Market constants.
 */
typedef struct EhMarket {
  double rate;
  double q_mort;
  double alpha;
  double rho;
  double maturity;
} EhMarket;

/**
 * Coefficients of one hazard diffusion.
 */
typedef struct EhHazard {
  double drift;
  double vol;
  double floor;
} EhHazard;

/**
 * Insured and reference dynamics with their time-zero hazards.
 */
typedef struct EhPopulations {
  struct EhHazard insured;
  struct EhHazard reference;
  double initial_insured;
  double initial_reference;
} EhPopulations;

/**
 * Grid in log-excess hazard: `intervals` cells on `[-half_width, half_width]`
 * and `steps` time steps to maturity.
 */
typedef struct EhGrid {
  double half_width;
  size_t intervals;
  size_t steps;
} EhGrid;

/**
 * Monte Carlo mean with its standard error.
 */
typedef struct EhEstimate {
  double mean;
  double std_error;
  size_t n_paths;
} EhEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` as a
 * NUL-terminated string, truncating to `len - 1` bytes. Returns the full
 * message length excluding the terminator. `buf` may be null when `len`
 * is 0 to query the length.
 *
 * # Safety
 * `buf` must be valid for `len` bytes of writes.
 */
size_t eh_last_error_message(char *buf, size_t len);

/**
 * Validates the parameters and returns a model handle in `*out`.
 *
 * # Safety
 * Pointers must be null or valid for the pointed-to type.
 */
enum EhStatus eh_model_new(const struct EhMarket *market,
                           const struct EhPopulations *pops,
                           struct EhModel **out);

/**
 * Built-in study parameters with the given correlation, mortality risk
 * premium and initial insured hazard.
 *
 * # Safety
 * `out` must be null or valid for writes.
 */
enum EhStatus eh_model_study(double rho,
                             double q_mort,
                             double initial_insured,
                             struct EhModel **out);

/**
 * Copies the model's market constants into `*out`.
 *
 * # Safety
 * `model` must be null or a live handle; `out` null or valid for writes.
 */
enum EhStatus eh_model_market(const struct EhModel *model, struct EhMarket *out);

/**
 * Releases a model handle. Null is ignored.
 *
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void eh_model_free(struct EhModel *model);

/**
 * Solves the price surface for a pool of `n_insured` lives. A null `grid`
 * selects the default grid for the model's maturity.
 *
 * # Safety
 * Pointers must be null or valid; `model` must be a live handle.
 */
enum EhStatus eh_solve_psi(const struct EhModel *model,
                           const struct EhGrid *grid,
                           uint32_t n_insured,
                           struct EhSurface **out);

/**
 * Solves the limiting per-contract surface.
 *
 * # Safety
 * As for [`eh_solve_psi`].
 */
enum EhStatus eh_solve_beta(const struct EhModel *model,
                            const struct EhGrid *grid,
                            struct EhSurface **out);

/**
 * Solves the reference survival factor that marks the q-forward. The
 * surface is indexed by the reference hazard.
 *
 * # Safety
 * As for [`eh_solve_psi`].
 */
enum EhStatus eh_solve_survival(const struct EhModel *model,
                                const struct EhGrid *grid,
                                struct EhSurface **out);

/**
 * Undiscounted surface value and its hazard derivative at `(lambda, t)`.
 * Either output pointer may be null.
 *
 * # Safety
 * `surface` must be a live handle; outputs null or valid for writes.
 */
enum EhStatus eh_surface_lookup(const struct EhSurface *surface,
                                double lambda,
                                double t,
                                double *value,
                                double *dlambda);

/**
 * Discounted price at `(lambda, t)` with short rate `rate`.
 *
 * # Safety
 * `surface` must be a live handle; `out` null or valid for writes.
 */
enum EhStatus eh_surface_price(const struct EhSurface *surface,
                               double rate,
                               double lambda,
                               double t,
                               double *out);

/**
 * Releases a surface handle. Null is ignored.
 *
 * # Safety
 * `surface` must be null or a handle not yet freed.
 */
void eh_surface_free(struct EhSurface *surface);

/**
 * Monte Carlo estimate of the unloaded single-life factor from
 * `lambda_p0`.
 *
 * # Safety
 * `model` must be a live handle; `out` null or valid for writes.
 */
enum EhStatus eh_mc_alpha0(const struct EhModel *model,
                           double lambda_p0,
                           size_t n_paths,
                           size_t n_steps,
                           uint64_t seed,
                           struct EhEstimate *out);

/**
 * Monte Carlo estimate of the limiting per-contract factor.
 *
 * # Safety
 * As for [`eh_mc_alpha0`].
 */
enum EhStatus eh_mc_beta(const struct EhModel *model,
                         double lambda_p0,
                         size_t n_paths,
                         size_t n_steps,
                         uint64_t seed,
                         struct EhEstimate *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ENDOWMENT_HEDGE_H */
