#ifndef QUASIFKPP_H
#define QUASIFKPP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes.
typedef enum QfStatus {
  QF_STATUS_OK = 0,
  // A required pointer was null.
  QF_STATUS_NULL_POINTER = 1,
  // Malformed or invalid scenario.
  QF_STATUS_CONFIG = 2,
  // The solver failed (blow-up, step underflow, quadrature).
  QF_STATUS_SOLVER = 3,
  // An argument was out of range.
  QF_STATUS_INVALID_ARGUMENT = 4,
  // Internal panic; the library state is still usable.
  QF_STATUS_PANIC = 5,
} QfStatus;

typedef struct QfField QfField;

typedef struct QfScenario QfScenario;

typedef struct QfTrajectory QfTrajectory;

// Moments of both packets at one time.
typedef struct QfMoments {
  double x[2];
  double sigma[2];
  double alpha2[2];
} QfMoments;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message of the calling thread into `buf` as a
// NUL-terminated string, truncated to `len` bytes including the terminator.
// Returns the full message length without the terminator; pass a null
// `buf` to query it.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t qf_last_error_message(char *buf, size_t len);

// Parses and validates a scenario from a JSON string.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be writable.
enum QfStatus qf_scenario_from_json(const char *json, struct QfScenario **out);

// Loads and validates a scenario file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum QfStatus qf_scenario_from_file(const char *path, struct QfScenario **out);

// Grid bounds and number of points of the scenario.
//
// # Safety
// `scenario` must be a live handle; the outputs must be writable.
enum QfStatus qf_scenario_grid(const struct QfScenario *scenario,
                               double *x_min,
                               double *x_max,
                               size_t *n_points);

// # Safety
// `scenario` must be null or a handle not yet freed.
void qf_scenario_free(struct QfScenario *scenario);

// Integrates the moment system up to `t_end`; `order` is 0 or 2.
//
// # Safety
// `scenario` must be a live handle; `out` must be writable.
enum QfStatus qf_solve_ees(const struct QfScenario *scenario,
                           uint32_t order,
                           double t_end,
                           struct QfTrajectory **out);

// Final time of the trajectory, or NaN for a null handle.
//
// # Safety
// `traj` must be null or a live handle.
double qf_trajectory_t_end(const struct QfTrajectory *traj);

// Moments at time `t` from the dense output.
//
// # Safety
// `traj` must be a live handle; `out` must be writable.
enum QfStatus qf_trajectory_state(const struct QfTrajectory *traj, double t, struct QfMoments *out);

// # Safety
// `traj` must be null or a handle not yet freed.
void qf_trajectory_free(struct QfTrajectory *traj);

// Composite asymptotic solution of order `k` (0..=2) at time `t`.
//
// # Safety
// Handles must be live and come from the same scenario; `out` must be writable.
enum QfStatus qf_asymptotic(const struct QfScenario *scenario,
                            const struct QfTrajectory *traj,
                            double t,
                            uint32_t k,
                            struct QfField **out);

// Reference solution of the full equation at time `t`.
//
// # Safety
// `scenario` must be a live handle; `out` must be writable.
enum QfStatus qf_solve_pde(const struct QfScenario *scenario, double t, struct QfField **out);

// Closed-form solution for constant coefficients at time `t`.
//
// # Safety
// `scenario` must be a live handle; `out` must be writable.
enum QfStatus qf_exact(const struct QfScenario *scenario, double t, struct QfField **out);

// Number of grid values, or 0 for a null handle.
//
// # Safety
// `field` must be null or a live handle.
size_t qf_field_len(const struct QfField *field);

// Time of the field, or NaN for a null handle.
//
// # Safety
// `field` must be null or a live handle.
double qf_field_time(const struct QfField *field);

// Copies the grid values into `buf`, which must hold `qf_field_len` doubles.
//
// # Safety
// `field` must be a live handle; `buf` must point to `len` writable doubles.
enum QfStatus qf_field_copy(const struct QfField *field, double *buf, size_t len);

// # Safety
// `field` must be null or a handle not yet freed.
void qf_field_free(struct QfField *field);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QUASIFKPP_H */
