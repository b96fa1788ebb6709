#ifndef LEVYLDP_H
#define LEVYLDP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum LevyStatus {
  LEVY_STATUS_OK = 0,
  LEVY_STATUS_NULL_POINTER = 1,
  LEVY_STATUS_INVALID_UTF8 = 2,
  LEVY_STATUS_DOMAIN = 3,
  LEVY_STATUS_CONVERGENCE = 4,
  LEVY_STATUS_CONFIG = 5,
  LEVY_STATUS_JSON = 6,
  LEVY_STATUS_IO = 7,
  LEVY_STATUS_OTHER = 8,
  LEVY_STATUS_PANIC = 9,
} LevyStatus;

/**
 * Opaque càdlàg path.
 */
typedef struct LevyPath LevyPath;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until the next failing call.
 */
const char *levy_last_error(void);

/**
 * Releases a string returned by the library.
 *
 * # Safety
 * `s` must come from this library or be null.
 */
void levy_string_free(char *s);

/**
 * Releases a path handle.
 *
 * # Safety
 * `p` must come from this library or be null.
 */
void levy_path_free(struct LevyPath *p);

/**
 * Parses a path from its JSON form.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` writable.
 */
enum LevyStatus levy_path_from_json(const char *json, struct LevyPath **out);

/**
 * Serialises a path to JSON. Release the result with `levy_string_free`.
 *
 * # Safety
 * `p` must be a live handle and `out` writable.
 */
enum LevyStatus levy_path_to_json(const struct LevyPath *p, char **out);

/**
 * Pure step path vanishing at 0 with `n` jumps on the default grid.
 *
 * # Safety
 * `times` and `sizes` must hold `n` values (or be null when `n` is 0) and `out` writable.
 */
enum LevyStatus levy_path_step(const double *times,
                               const double *sizes,
                               size_t n,
                               struct LevyPath **out);

/**
 * `x(t)`.
 *
 * # Safety
 * `p` must be a live handle and `out` writable.
 */
enum LevyStatus levy_path_eval(const struct LevyPath *p, double t, double *out);

/**
 * Number of registered jumps, or 0 for a null handle.
 *
 * # Safety
 * `p` must be a live handle or null.
 */
size_t levy_path_jump_count(const struct LevyPath *p);

/**
 * Copies jump `i` into `time` and `size`.
 *
 * # Safety
 * `p` must be a live handle and the outputs writable.
 */
enum LevyStatus levy_path_jump(const struct LevyPath *p, size_t i, double *time, double *size);

/**
 * Uniform distance `‖x − y‖∞`.
 *
 * # Safety
 * Both handles must be live and `out` writable.
 */
enum LevyStatus levy_uniform_distance(const struct LevyPath *a,
                                      const struct LevyPath *b,
                                      double *out);

/**
 * J1 distance bracket. `lower == upper` when the value is exact.
 *
 * # Safety
 * Both handles must be live and the outputs writable.
 */
enum LevyStatus levy_j1_distance(const struct LevyPath *a,
                                 const struct LevyPath *b,
                                 double tol,
                                 double *lower,
                                 double *upper);

/**
 * Solution map `F` for a registry drift (or its inverse when `inverse` is non-zero).
 *
 * # Safety
 * `drift_name` must be a NUL-terminated string, `g` a live handle and `out` writable.
 */
enum LevyStatus levy_apply_f(const char *drift_name,
                             double drift_param,
                             const struct LevyPath *g,
                             int inverse,
                             struct LevyPath **out);

/**
 * Rate `I(ξ)` with the default step tolerance.
 *
 * # Safety
 * `p` must be a live handle and `out` writable.
 */
enum LevyStatus levy_rate_i(const struct LevyPath *p, double alpha, double beta, double *out);

/**
 * Rate `Ĩ(ξ) = I(F⁻¹(ξ))` for a registry drift.
 *
 * # Safety
 * `drift_name` must be a NUL-terminated string, `p` a live handle and `out` writable.
 */
enum LevyStatus levy_rate_i_tilde(const struct LevyPath *p,
                                  const char *drift_name,
                                  double drift_param,
                                  double alpha,
                                  double beta,
                                  double *out);

/**
 * Sample `index` of the scaled noise `εL^ε` described by an experiment config text.
 *
 * # Safety
 * `config_text` must be a NUL-terminated string and `out` writable.
 */
enum LevyStatus levy_sample_path(const char *config_text,
                                 double eps,
                                 uint64_t index,
                                 struct LevyPath **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LEVYLDP_H */
