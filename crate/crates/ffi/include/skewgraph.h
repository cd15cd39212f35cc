#ifndef SKEWGRAPH_H
#define SKEWGRAPH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes. `SG_STATUS_VALIDATION` and `SG_STATUS_BUDGET` match the
 * command-line exit codes 2 and 3.
 */
typedef enum SgStatus {
  SG_STATUS_OK = 0,
  SG_STATUS_NULL_ARGUMENT = 1,
  SG_STATUS_VALIDATION = 2,
  SG_STATUS_BUDGET = 3,
  SG_STATUS_IO = 4,
  SG_STATUS_PANIC = 5,
} SgStatus;

/**
 * A skew product system. Opaque.
 */
typedef struct SgSystem SgSystem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Owned by the
 * library; valid until the next call.
 */
const char *sg_last_error(void);

/**
 * Library version as a static string.
 */
const char *sg_version(void);

/**
 * Builds a system from a TOML document with a `[system]` table and an
 * optional `[base]` table, in the command-line config format.
 *
 * # Safety
 * `toml` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SgStatus sg_system_from_toml(const char *toml, struct SgSystem **out);

/**
 * Builds a preset with its default parameters.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SgStatus sg_system_from_preset(const char *name, struct SgSystem **out);

/**
 * Releases a system. Null is ignored.
 *
 * # Safety
 * `sys` must come from this library and not have been freed.
 */
void sg_system_free(struct SgSystem *sys);

/**
 * Number of symbols, or 0 for a null handle.
 *
 * # Safety
 * `sys` must be null or a live handle.
 */
size_t sg_system_alphabet_size(const struct SgSystem *sys);

/**
 * Fiber dimension, or 0 for a null handle.
 *
 * # Safety
 * `sys` must be null or a live handle.
 */
size_t sg_system_dim(const struct SgSystem *sys);

/**
 * Codes the sequence whose past is `past` (θ_{-1} first) followed by the
 * periodic `past_tail`, with the future repeating `past_tail`. Writes
 * `sg_system_dim` coordinates to `point` and the depth used to `depth`.
 * Returns `SG_STATUS_BUDGET` when the enclosure is still wider than `tol`
 * at `max_depth`.
 *
 * # Safety
 * Array arguments must hold the stated number of elements; `point` must
 * have room for `sg_system_dim(sys)` doubles. `depth` may be null.
 */
enum SgStatus sg_code(const struct SgSystem *sys,
                      const uint8_t *past,
                      size_t past_len,
                      const uint8_t *past_tail,
                      size_t past_tail_len,
                      size_t max_depth,
                      double tol,
                      double *point,
                      size_t *depth);

/**
 * Mean backward-image diameter at each depth over `n_samples` stationary
 * pasts, plus the fitted per-step factor `λ` of `mean ≈ C λ^n`.
 *
 * # Safety
 * `depths` and `means` must hold `n_depths` elements; `lambda` may be null.
 */
enum SgStatus sg_decay(const struct SgSystem *sys,
                       const size_t *depths,
                       size_t n_depths,
                       size_t n_samples,
                       uint64_t seed,
                       double *means,
                       double *lambda);

/**
 * Runs a full experiment config. `out_dir` may be null to skip writing
 * files; `results_json` may be null, otherwise it receives the
 * `results.json` document, to be released with [`sg_string_free`].
 * `SG_STATUS_BUDGET` still produces outputs.
 *
 * # Safety
 * String arguments must be NUL-terminated.
 */
enum SgStatus sg_run_config(const char *toml, const char *out_dir, char **results_json);

/**
 * Releases a string returned by the library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void sg_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SKEWGRAPH_H */
