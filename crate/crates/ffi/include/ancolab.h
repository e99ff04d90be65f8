#ifndef ANCOLAB_H
#define ANCOLAB_H

/* Generated by cbindgen from the ancolab-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.  `Ok` is zero; the error values mirror
 * the command line exit codes where one exists.
 */
typedef enum AncoStatus {
  ANCO_STATUS_OK = 0,
  /**
   * A verification pass completed and failed, or a numerical guard
   * tripped.
   */
  ANCO_STATUS_VERIFICATION_FAILED = 2,
  /**
   * Malformed input: unknown preset, bad configuration JSON, invalid
   * parameters.
   */
  ANCO_STATUS_INVALID_INPUT = 3,
  /**
   * A required pointer argument was null.
   */
  ANCO_STATUS_NULL_ARGUMENT = 4,
  /**
   * A string argument was not valid UTF-8.
   */
  ANCO_STATUS_INVALID_UTF8 = 5,
  /**
   * An internal invariant broke; the library caught a panic.
   */
  ANCO_STATUS_PANICKED = 6,
} AncoStatus;

/**
 * Opaque experiment description; create with [`anco_experiment_preset`] or
 * [`anco_experiment_from_json`], release with [`anco_experiment_free`].
 */
typedef struct AncoExperiment AncoExperiment;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Builds an experiment from a built-in preset name
 * (`flat`, `su2-demo`, `hopf`, or `pkl:<k>:<l>`).
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer; on
 * success `*out` owns the handle.
 */
enum AncoStatus anco_experiment_preset(const char *name, struct AncoExperiment **out);

/**
 * Builds an experiment from configuration JSON (the same schema the
 * command line accepts with `--config`).
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer; on
 * success `*out` owns the handle.
 */
enum AncoStatus anco_experiment_from_json(const char *json, struct AncoExperiment **out);

/**
 * Releases an experiment handle.  Null is ignored.
 *
 * # Safety
 * `exp` must be null or a handle produced by this library that has not
 * been freed before.
 */
void anco_experiment_free(struct AncoExperiment *exp);

/**
 * Sweeps the truncated curvature operator over the experiment's shrinking
 * grid and writes the full run report as JSON to `*out_json`.
 *
 * # Safety
 * `exp` must be a live handle and `out_json` a valid pointer; on success
 * the caller owns `*out_json` and must pass it to [`anco_string_free`].
 */
enum AncoStatus anco_analyze(const struct AncoExperiment *exp, char **out_json);

/**
 * Checks the block engine against the finite-difference oracle at `points`
 * seeded base points and writes the verification report as JSON to
 * `*out_json`.  Returns `Ok` when the report passes and
 * `VerificationFailed` when it completes with a failing check (the report
 * is still written in that case).
 *
 * # Safety
 * `exp` must be a live handle and `out_json` a valid pointer; on success
 * or verification failure the caller owns `*out_json` and must pass it to
 * [`anco_string_free`].
 */
enum AncoStatus anco_verify(const struct AncoExperiment *exp,
                            size_t points,
                            uint64_t seed,
                            char **out_json);

/**
 * Computes integer cohomology, fundamental group, and duality diagnostics
 * for the circle bundle the experiment describes, writing the report as
 * JSON to `*out_json`.
 *
 * # Safety
 * `exp` must be a live handle and `out_json` a valid pointer; on success
 * the caller owns `*out_json` and must pass it to [`anco_string_free`].
 */
enum AncoStatus anco_topology(const struct AncoExperiment *exp, char **out_json);

/**
 * Releases a string returned by this library.  Null is ignored.
 *
 * # Safety
 * `s` must be null or a string produced by this library that has not been
 * freed before.
 */
void anco_string_free(char *s);

/**
 * Message describing the most recent failure on this thread, or null when
 * the last call succeeded.  The pointer stays valid until the next failing
 * call on the same thread; do not free it.
 */
const char *anco_last_error_message(void);

/**
 * Library version as a static NUL-terminated string; do not free it.
 */
const char *anco_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ANCOLAB_H */
