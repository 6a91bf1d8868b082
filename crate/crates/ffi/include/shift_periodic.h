#ifndef SHIFT_PERIODIC_H
#define SHIFT_PERIODIC_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes. Values 2 to 7 match the exit codes of the command-line tool.
 */
typedef enum {
  SP_STATUS_OK = 0,
  SP_STATUS_PARSE = 2,
  SP_STATUS_INVARIANT = 3,
  SP_STATUS_CRITICAL = 4,
  SP_STATUS_NOT_CONTRACTIVE = 5,
  SP_STATUS_NUMERICAL = 6,
  SP_STATUS_MAX_ITERATIONS = 7,
  SP_STATUS_NULL_ARGUMENT = 8,
  SP_STATUS_BUFFER_TOO_SMALL = 9,
  SP_STATUS_INTERNAL = 10,
} SpStatus;

/**
 * A loaded problem.
 */
typedef struct SpProblem SpProblem;

typedef struct {
  double r;
  double norm_a;
  double e1;
  double e2;
  double e3;
  double alpha;
  double beta;
  double window_length;
  double n_bound;
  double contraction_constant;
  /**
   * Least admissible ball radius; infinite when none exists.
   */
  double jmin;
  bool noncritical;
  bool nontrivial;
  bool krasnoselskii_ok;
  bool contraction_ok;
  bool lipschitz_estimated;
} SpConditionReport;

typedef struct {
  size_t iterations;
  double max_ratio;
  double contraction_constant;
  bool ratios_within_bound;
  double integral_residual;
  double differential_residual;
  double periodicity_residual;
} SpSolveInfo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *sp_last_error_message(void);

/**
 * Loads a problem file, or a bundled problem by name.
 *
 * # Safety
 * `path` must be a nul-terminated string and `out` a valid pointer.
 */
SpStatus sp_problem_load_path(const char *path, SpProblem **out);

/**
 * Loads a problem from TOML text.
 *
 * # Safety
 * `text` must be a nul-terminated string and `out` a valid pointer.
 */
SpStatus sp_problem_load_toml(const char *text, SpProblem **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `p` must come from one of the load functions and not be used afterwards.
 */
void sp_problem_free(SpProblem *p);

/**
 * State dimension, or 0 for a null handle.
 *
 * # Safety
 * `p` must be null or a live handle.
 */
size_t sp_problem_dimension(const SpProblem *p);

/**
 * Number of points in the first window, or 0 for a null handle.
 *
 * # Safety
 * `p` must be null or a live handle.
 */
size_t sp_problem_window_len(const SpProblem *p);

/**
 * Writes the monodromy matrix row-major into `out` (`len ≥ n·n`).
 *
 * # Safety
 * `out` must point to `len` writable doubles.
 */
SpStatus sp_problem_monodromy(const SpProblem *p, double *out, size_t len);

/**
 * Fills the condition report with default options.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
SpStatus sp_problem_check(const SpProblem *p, SpConditionReport *out);

/**
 * Runs the Picard iteration from zero and writes the window values
 * row-major (one row per window point) into `out` (`len ≥ points·n`).
 * Nonpositive `tol` or zero `max_iter` select the defaults.
 *
 * # Safety
 * `out` must point to `len` writable doubles; `info` may be null.
 */
SpStatus sp_problem_solve(const SpProblem *p,
                          double tol,
                          size_t max_iter,
                          double *out,
                          size_t len,
                          SpSolveInfo *info);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SHIFT_PERIODIC_H */
