/*
 * C interface to the virodyn within-host viral dynamics toolkit.
 *
 * Conventions:
 *   - every fallible call returns VdStatus; VD_STATUS_OK is 0
 *   - on failure, vd_last_error() describes what went wrong (thread-local)
 *   - VdModel / VdTrajectory are opaque; release them with the matching
 *     vd_*_free call
 *   - char* outputs are heap-allocated UTF-8 JSON; release with
 *     vd_string_free
 */

#ifndef VIRODYN_H
#define VIRODYN_H

/* Generated from the virodyn-ffi crate by cbindgen; edit the Rust source instead. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Outcome of a call. `VD_STATUS_OK` is 0; every other value names a failure
 * class and leaves a message in `vd_last_error()`.
 */
typedef enum VdStatus {
  /**
   * Success.
   */
  VD_STATUS_OK = 0,
  /**
   * A required pointer argument was NULL.
   */
  VD_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  VD_STATUS_INVALID_UTF8 = 2,
  /**
   * Arguments were well-formed but rejected: unknown model id, bad
   * parameter value, inadmissible state, invalid solver settings.
   */
  VD_STATUS_INVALID_ARGUMENT = 3,
  /**
   * The computation itself failed: step size underflow, non-finite
   * values, or an eigenvalue/root iteration that did not converge.
   */
  VD_STATUS_NUMERICAL_FAILURE = 4,
  /**
   * A caller-provided buffer is smaller than the data to copy.
   */
  VD_STATUS_BUFFER_TOO_SMALL = 5,
  /**
   * A bug: an internal panic was caught at the boundary.
   */
  VD_STATUS_INTERNAL_PANIC = 6,
} VdStatus;

/**
 * Time stepping scheme.
 */
typedef enum VdMethod {
  /**
   * Embedded Dormand-Prince 4(5) pair with adaptive step control.
   */
  VD_METHOD_RK45_ADAPTIVE = 0,
  /**
   * Classical fixed-step fourth-order Runge-Kutta.
   */
  VD_METHOD_RK4_FIXED = 1,
} VdMethod;

/**
 * Opaque handle to a validated model (equations plus parameter values).
 */
typedef struct VdModel VdModel;

/**
 * Opaque handle to a computed trajectory.
 */
typedef struct VdTrajectory VdTrajectory;

/**
 * Solver settings; get defaults from `vd_integrator_defaults()`.
 */
typedef struct VdIntegratorOptions {
  enum VdMethod method;
  /**
   * Step size (days); the initial trial step for the adaptive method.
   */
  double dt;
  /**
   * Relative error tolerance (adaptive method only).
   */
  double rel_tol;
  /**
   * Absolute error tolerance (adaptive method only).
   */
  double abs_tol;
  /**
   * End of the integration window (days), starting from 0.
   */
  double t_end;
  /**
   * Keep every emitted state admissible by clamping tiny negative
   * overshoots and retrying oversized steps.
   */
  bool positivity_guard;
} VdIntegratorOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Builds a model from its id and a JSON object of parameter overrides.
 *
 * `model_id` is one of "nowak-may", "snedecor", "perelson", "dlr",
 * "multi-strain". `params_json` may be NULL or "{}" for published defaults;
 * fields not present keep their default value, unknown fields are
 * rejected. The handle must be released with `vd_model_free`.
 *
 * # Safety
 * `model_id` and (when non-NULL) `params_json` must be NUL-terminated;
 * `out_model` must be a valid pointer.
 */
enum VdStatus vd_model_new(const char *model_id,
                           const char *params_json,
                           struct VdModel **out_model);

/**
 * Releases a model handle. NULL is a no-op.
 *
 * # Safety
 * `model` must have come from `vd_model_new` and not be freed twice.
 */
void vd_model_free(struct VdModel *model);

/**
 * Number of state components of the model (3, 4, or 4n). Returns 0 for
 * NULL.
 *
 * # Safety
 * `model` must be NULL or a live handle from `vd_model_new`.
 */
size_t vd_model_dim(const struct VdModel *model);

/**
 * Describes the model as JSON: id, dimension, component names in state
 * order, and the full parameter set in effect.
 *
 * # Safety
 * `model` must be a live handle; `out_json` must be a valid pointer.
 */
enum VdStatus vd_model_describe_json(const struct VdModel *model, char **out_json);

/**
 * The solver settings used when `options` is NULL: adaptive stepping,
 * dt = 0.01, rel_tol = 1e-8, abs_tol = 1e-10, t_end = 600, guard on.
 */
struct VdIntegratorOptions vd_integrator_defaults(void);

/**
 * Integrates the model from `y0` (length `dim`, which must equal
 * `vd_model_dim`). `options` may be NULL for defaults. On success the
 * trajectory handle must be released with `vd_trajectory_free`.
 *
 * # Safety
 * `model` must be a live handle; `y0` must point to `dim` doubles;
 * `options` must be NULL or valid; `out_trajectory` must be valid.
 */
enum VdStatus vd_simulate(const struct VdModel *model,
                          const double *y0,
                          size_t dim,
                          const struct VdIntegratorOptions *options,
                          struct VdTrajectory **out_trajectory);

/**
 * Releases a trajectory handle. NULL is a no-op.
 *
 * # Safety
 * `trajectory` must have come from `vd_simulate` and not be freed twice.
 */
void vd_trajectory_free(struct VdTrajectory *trajectory);

/**
 * Number of stored samples. Returns 0 for NULL.
 *
 * # Safety
 * `trajectory` must be NULL or a live handle.
 */
size_t vd_trajectory_len(const struct VdTrajectory *trajectory);

/**
 * Number of state components per sample. Returns 0 for NULL.
 *
 * # Safety
 * `trajectory` must be NULL or a live handle.
 */
size_t vd_trajectory_dim(const struct VdTrajectory *trajectory);

/**
 * Copies the sample times (days) into `buf`. `capacity` must be at least
 * `vd_trajectory_len`.
 *
 * # Safety
 * `trajectory` must be a live handle; `buf` must hold `capacity` doubles.
 */
enum VdStatus vd_trajectory_times(const struct VdTrajectory *trajectory,
                                  double *buf,
                                  size_t capacity);

/**
 * Copies the states row-major (sample-by-sample) into `buf`. `capacity`
 * must be at least `len * dim`.
 *
 * # Safety
 * `trajectory` must be a live handle; `buf` must hold `capacity` doubles.
 */
enum VdStatus vd_trajectory_states(const struct VdTrajectory *trajectory,
                                   double *buf,
                                   size_t capacity);

/**
 * Copies the final state into `buf`. `capacity` must be at least the
 * trajectory dimension.
 *
 * # Safety
 * `trajectory` must be a live handle; `buf` must hold `capacity` doubles.
 */
enum VdStatus vd_trajectory_final_state(const struct VdTrajectory *trajectory,
                                        double *buf,
                                        size_t capacity);

/**
 * Serializes the whole trajectory (times, states, solver counters) as
 * JSON.
 *
 * # Safety
 * `trajectory` must be a live handle; `out_json` must be valid.
 */
enum VdStatus vd_trajectory_json(const struct VdTrajectory *trajectory, char **out_json);

/**
 * Per-component global extrema and first local extrema of a trajectory,
 * as JSON.
 *
 * # Safety
 * `trajectory` must be a live handle; `out_json` must be valid.
 */
enum VdStatus vd_landmarks_json(const struct VdTrajectory *trajectory, char **out_json);

/**
 * Equilibria of a single-strain model as a JSON array. With `classify`
 * true each entry also carries the Jacobian spectrum, a stability verdict,
 * and admissible unstable directions for boundary points.
 *
 * # Safety
 * `model` must be a live handle; `out_json` must be valid.
 */
enum VdStatus vd_fixed_points_json(const struct VdModel *model, bool classify, char **out_json);

/**
 * Model-specific derived quantities as JSON: basic reproduction numbers,
 * seroconversion thresholds and the equilibrium discriminant, or the
 * antigenicity-structured scalars (eta, rho, v_bar, gamma_bound,
 * l_threshold), together with the seropositive equilibria.
 *
 * # Safety
 * `model` must be a live handle; `out_json` must be valid.
 */
enum VdStatus vd_derived_json(const struct VdModel *model, char **out_json);

/**
 * Runs the structural property checks that apply to this model against a
 * computed trajectory and returns the reports as a JSON array: positivity
 * always; the growth bound and the single-strain reduction agreement for
 * the antigenicity-structured model; the macroscopic balance laws for the
 * multi-strain system (fixed-step trajectories only).
 *
 * # Safety
 * `model` and `trajectory` must be live handles; `out_json` must be valid.
 */
enum VdStatus vd_verify_json(const struct VdModel *model,
                             const struct VdTrajectory *trajectory,
                             char **out_json);

/**
 * Message for the most recent failure on this thread. The pointer stays
 * valid until the next failing call on the same thread; do not free it.
 */
const char *vd_last_error(void);

/**
 * Releases a string returned by the `*_json` functions. NULL is a no-op.
 *
 * # Safety
 * `s` must have come from this library and not be freed twice.
 */
void vd_string_free(char *s);

/**
 * Library version as a static string; do not free.
 */
const char *vd_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VIRODYN_H */
