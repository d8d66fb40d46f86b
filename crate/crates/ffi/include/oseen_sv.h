#ifndef OSEEN_SV_H
#define OSEEN_SV_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum OseenStatus {
  OSEEN_STATUS_OK = 0,
  OSEEN_STATUS_NULL_POINTER = 1,
  OSEEN_STATUS_INVALID_ARGUMENT = 2,
  OSEEN_STATUS_NUMERICAL = 3,
  OSEEN_STATUS_OUTSIDE_DOMAIN = 4,
  OSEEN_STATUS_PANIC = 5,
} OseenStatus;

typedef enum OseenStab {
  OSEEN_STAB_NONE = 0,
  OSEEN_STAB_CLASSICAL = 1,
  OSEEN_STAB_CURL = 2,
} OseenStab;

/**
 * Opaque handle to a solved problem.
 */
typedef struct OseenRun OseenRun;

/**
 * Error norms of a solved run.
 */
typedef struct OseenErrors {
  double h;
  double l2_u;
  double l2_p;
  double energy;
  double div_sup;
} OseenErrors;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or an empty string. The pointer stays
 * valid until the next call into this library on the same thread.
 */
const char *oseen_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *oseen_version(void);

/**
 * Velocity, pressure and total DOF counts on a refinement level.
 *
 * # Safety
 * Output pointers must be valid for writes.
 */
enum OseenStatus oseen_dof_counts(size_t level,
                                  size_t k,
                                  size_t *dofs_u,
                                  size_t *dofs_p,
                                  size_t *dofs_total);

/**
 * Assembles and solves one case (`"lattice"`, `"layer"` or `"patch"`) on one level. On
 * success `*out` owns a new handle.
 *
 * # Safety
 * `case_name` must be a NUL-terminated string and `out` valid for writes.
 */
enum OseenStatus oseen_run_new(const char *case_name,
                               double mu,
                               double sigma,
                               size_t level,
                               size_t k,
                               enum OseenStab stab,
                               double delta1,
                               double delta2,
                               double delta3,
                               struct OseenRun **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `run` must come from [`oseen_run_new`] and not have been freed.
 */
void oseen_run_free(struct OseenRun *run);

/**
 * # Safety
 * `run` must be a live handle; output pointers valid for writes.
 */
enum OseenStatus oseen_run_dofs(const struct OseenRun *run, size_t *dofs_u, size_t *dofs_p);

/**
 * # Safety
 * `run` must be a live handle and `errors` valid for writes.
 */
enum OseenStatus oseen_run_errors(const struct OseenRun *run, struct OseenErrors *errors);

/**
 * Discrete velocity at a physical point; writes two values to `value`.
 *
 * # Safety
 * `run` must be a live handle and `value` valid for two writes.
 */
enum OseenStatus oseen_run_eval_velocity(const struct OseenRun *run,
                                         double x,
                                         double y,
                                         double *value);

/**
 * Discrete pressure at a physical point.
 *
 * # Safety
 * `run` must be a live handle and `value` valid for writes.
 */
enum OseenStatus oseen_run_eval_pressure(const struct OseenRun *run,
                                         double x,
                                         double y,
                                         double *value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OSEEN_SV_H */
