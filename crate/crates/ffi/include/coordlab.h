#ifndef COORDLAB_H
#define COORDLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CoordStatus {
  COORD_STATUS_OK = 0,
  COORD_STATUS_NULL_POINTER = 1,
  COORD_STATUS_INVALID_ARGUMENT = 2,
  COORD_STATUS_GUARD = 3,
  COORD_STATUS_IO = 4,
  COORD_STATUS_PANIC = 5,
} CoordStatus;

typedef struct CoordCode CoordCode;

/**
 * Source pmf together with a target conditional.
 */
typedef struct CoordProblem CoordProblem;

/**
 * One two-node frontier point.
 */
typedef struct CoordRegionPoint {
  double delta;
  double rate;
  /**
   * Primal value minus the certified lower bound, in bits.
   */
  double certificate;
  bool converged;
  uint64_t iterations;
} CoordRegionPoint;

typedef struct CoordSimSummary {
  uint64_t samples;
  double mean_tv;
  double standard_error;
  double median_tv;
} CoordSimSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. The string stays
 * valid until the next failing call on the same thread.
 */
const char *coordlab_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *coordlab_version(void);

/**
 * Builds a problem from `source` (`x_size` entries) and a row-major
 * `target` of `x_size` rows with `y_size * z_size` entries each, `z`
 * fastest. Pass `z_size = 0` for a two-node problem.
 *
 * # Safety
 * `source` and `target` must point to the stated number of doubles and
 * `out_problem` must be writable.
 */
enum CoordStatus coordlab_problem_new(const double *source,
                                      size_t x_size,
                                      const double *target,
                                      size_t y_size,
                                      size_t z_size,
                                      struct CoordProblem **out_problem);

/**
 * # Safety
 * `problem` must come from [`coordlab_problem_new`] and not be used
 * afterwards. Null is ignored.
 */
void coordlab_problem_free(struct CoordProblem *problem);

/**
 * # Safety
 * `problem` must be a live handle and `out_delta` writable.
 */
enum CoordStatus coordlab_delta_star(const struct CoordProblem *problem, double *out_delta);

/**
 * Minimum rate of a two-node problem at fidelity `delta`, with default
 * tolerances except the duality gap (`gap_tol`, or the default when NaN).
 * When `argmin` is non-null it receives the minimizing conditional,
 * row-major, and must hold `argmin_len` doubles, equal to the target's
 * size.
 *
 * # Safety
 * `problem` must be a live handle, `out_point` writable and `argmin`
 * either null or valid for `argmin_len` doubles.
 */
enum CoordStatus coordlab_solve_two_node(const struct CoordProblem *problem,
                                         double delta,
                                         double gap_tol,
                                         struct CoordRegionPoint *out_point,
                                         double *argmin,
                                         size_t argmin_len);

/**
 * Random-codebook code for the problem's target at blocklength `n`.
 * `r2` is NaN for a two-node problem.
 *
 * # Safety
 * `problem` must be a live handle and `out_code` writable.
 */
enum CoordStatus coordlab_code_build(const struct CoordProblem *problem,
                                     size_t n,
                                     double r1,
                                     double r2,
                                     uint64_t seed,
                                     struct CoordCode **out_code);

/**
 * Code running `k` independent copies of `code` back to back.
 *
 * # Safety
 * `code` must be a live handle and `out_code` writable.
 */
enum CoordStatus coordlab_code_block_repeat(const struct CoordCode *code,
                                            size_t k,
                                            struct CoordCode **out_code);

/**
 * # Safety
 * `code` must come from this library and not be used afterwards. Null is
 * ignored.
 */
void coordlab_code_free(struct CoordCode *code);

/**
 * Total blocklength and per-block message counts; `out_m2` receives 0 for a
 * two-node code.
 *
 * # Safety
 * `code` must be a live handle; the outputs must be writable.
 */
enum CoordStatus coordlab_code_info(const struct CoordCode *code,
                                    size_t *out_blocklength,
                                    size_t *out_m1,
                                    size_t *out_m2);

/**
 * Runs the code on one source sequence of exactly its blocklength. `z`
 * may be null for a two-node code.
 *
 * # Safety
 * `x`, `y` and non-null `z` must be valid for `len` bytes.
 */
enum CoordStatus coordlab_code_apply(const struct CoordCode *code,
                                     const uint8_t *x,
                                     size_t len,
                                     uint8_t *y,
                                     uint8_t *z);

/**
 * Exact expected TV distance between the code's joint type and the
 * problem's target, by enumeration of source sequences.
 *
 * # Safety
 * Both handles must be live and `out_tv` writable.
 */
enum CoordStatus coordlab_code_expected_tv(const struct CoordCode *code,
                                           const struct CoordProblem *problem,
                                           double *out_tv);

/**
 * Monte-Carlo estimate of the expected TV distance; deterministic in
 * `seed`.
 *
 * # Safety
 * Both handles must be live and `out_summary` writable.
 */
enum CoordStatus coordlab_code_simulate(const struct CoordCode *code,
                                        const struct CoordProblem *problem,
                                        size_t samples,
                                        uint64_t seed,
                                        struct CoordSimSummary *out_summary);

/**
 * The code as a JSON document, written into `buf` with a trailing NUL.
 * `out_len` receives the length needed including the NUL; call with
 * `buf_len = 0` to size the buffer.
 *
 * # Safety
 * `code` must be a live handle, `out_len` writable and `buf` valid for
 * `buf_len` bytes when non-null.
 */
enum CoordStatus coordlab_code_to_json(const struct CoordCode *code,
                                       char *buf,
                                       size_t buf_len,
                                       size_t *out_len);

/**
 * Reads a code written by [`coordlab_code_to_json`].
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out_code` writable.
 */
enum CoordStatus coordlab_code_from_json(const char *json, struct CoordCode **out_code);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COORDLAB_H */
