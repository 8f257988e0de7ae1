#ifndef STCL_H
#define STCL_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum StclStatus {
  STCL_STATUS_OK = 0,
  STCL_STATUS_INVALID_ARGUMENT = 1,
  STCL_STATUS_UNKNOWN_PRESET = 2,
  STCL_STATUS_NUMERICAL = 3,
  STCL_STATUS_MISMATCH = 4,
  STCL_STATUS_GEOMETRY = 5,
  STCL_STATUS_NULL_POINTER = 6,
  STCL_STATUS_PANIC = 7,
  STCL_STATUS_OTHER = 8,
} StclStatus;

/**
 * Foliated spacetime built from a metric preset.
 */
typedef struct StclSpacetime StclSpacetime;

/**
 * Solver output together with the flux it was computed with.
 */
typedef struct StclTrajectory StclTrajectory;

/**
 * Log-log least-squares fit.
 */
typedef struct StclRateFit {
  double slope;
  double intercept;
  double r_squared;
  /**
   * Half-width of the 95% band of the slope.
   */
  double half_width;
} StclRateFit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread (empty if none). The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *stcl_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *stcl_version(void);

/**
 * Builds a spacetime over `[0, t_max]` from a metric preset. `keys` and
 * `values` hold `n_params` preset parameters (both may be null when
 * `n_params` is 0).
 *
 * # Safety
 * String arguments must be NUL-terminated; `keys` and `values` must hold
 * `n_params` entries; `out` must be writable.
 */
enum StclStatus stcl_spacetime_new(const char *metric,
                                   double t_max,
                                   double leaf_length,
                                   const char *const *keys,
                                   const double *values,
                                   size_t n_params,
                                   struct StclSpacetime **out);

/**
 * # Safety
 * `st` must come from [`stcl_spacetime_new`] and not be used afterwards.
 */
void stcl_spacetime_free(struct StclSpacetime *st);

/**
 * Evolves initial datum `ic` (e.g. `"riemann(1,0)"`) under a flux preset up
 * to `t_end`. With a non-null `viscosity` the diffusion model with that
 * preset and coefficient `eps` is solved instead.
 *
 * # Safety
 * `st` must be a live handle; strings must be NUL-terminated or null where
 * allowed; `out` must be writable.
 */
enum StclStatus stcl_solve(const struct StclSpacetime *st,
                           const char *flux,
                           const char *ic,
                           size_t n_cells,
                           double cfl,
                           double c0,
                           double t_end,
                           const char *viscosity,
                           double eps,
                           struct StclTrajectory **out);

/**
 * # Safety
 * `traj` must come from [`stcl_solve`] and not be used afterwards.
 */
void stcl_trajectory_free(struct StclTrajectory *traj);

/**
 * Number of stored slices and of cells per slice.
 *
 * # Safety
 * `traj` must be a live handle; the outputs must be writable.
 */
enum StclStatus stcl_trajectory_shape(const struct StclTrajectory *traj,
                                      size_t *n_slices,
                                      size_t *n_cells);

/**
 * Copies slice `index` into `values` (capacity `len`, at least the cell
 * count) and its time into `t`.
 *
 * # Safety
 * `traj` must be a live handle; `values` must hold `len` doubles.
 */
enum StclStatus stcl_trajectory_slice(const struct StclTrajectory *traj,
                                      size_t index,
                                      double *t,
                                      double *values,
                                      size_t len);

/**
 * Flux distance `sum |f^t(u) - f^t(v)| a dx` between the final slices.
 *
 * # Safety
 * All handles must be live and `out` writable.
 */
enum StclStatus stcl_final_distance(const struct StclSpacetime *st,
                                    const struct StclTrajectory *u,
                                    const struct StclTrajectory *v,
                                    double *out);

/**
 * Fits `ln y = slope ln x + intercept` through `n >= 3` positive pairs.
 *
 * # Safety
 * `xs` and `ys` must hold `n` doubles; `out` must be writable.
 */
enum StclStatus stcl_fit_rate(const double *xs,
                              const double *ys,
                              size_t n,
                              struct StclRateFit *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STCL_H */
