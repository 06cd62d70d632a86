#ifndef ENVKIT_H
#define ENVKIT_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum EnvkitStatus {
  ENVKIT_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  ENVKIT_STATUS_NULL_POINTER = 1,
  /**
   * A string argument was not UTF-8.
   */
  ENVKIT_STATUS_INVALID_UTF8 = 2,
  /**
   * Malformed JSON or a document of the wrong shape.
   */
  ENVKIT_STATUS_INVALID_JSON = 3,
  /**
   * Bad dimensions, non-normalized input, infeasible parameters.
   */
  ENVKIT_STATUS_INVALID_INPUT = 4,
  /**
   * The computation ran but its result could not be certified.
   */
  ENVKIT_STATUS_CERTIFICATION_FAILED = 5,
  /**
   * A caller buffer was too small; the required length is still reported.
   */
  ENVKIT_STATUS_BUFFER_TOO_SMALL = 6,
  /**
   * Internal panic caught at the boundary.
   */
  ENVKIT_STATUS_PANIC = 7,
} EnvkitStatus;

/**
 * Schmidt picture of a state: reduced operators, correlation operator and
 * spectral blocks.
 */
typedef struct EnvkitPicture EnvkitPicture;

/**
 * Bipartite pure state.
 */
typedef struct EnvkitState EnvkitState;

/**
 * Pair of local unitaries `(U1, U2)`.
 */
typedef struct EnvkitTwin EnvkitTwin;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null. The pointer
 * stays valid until the next envkit call on the same thread.
 */
const char *envkit_last_error(void);

/**
 * Library version as a static string.
 */
const char *envkit_version(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void envkit_string_free(char *s);

/**
 * Parses a state from its JSON form
 * (`{"d1":..,"d2":..,"amplitudes":[[re,im],..]}`).
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum EnvkitStatus envkit_state_from_json(const char *json, struct EnvkitState **out);

/**
 * Draws a random state. `rank` of zero means full rank; `denominator` of
 * zero leaves the spectrum continuous, otherwise every Schmidt weight is a
 * multiple of `1/denominator`.
 *
 * # Safety
 * `out` must be writable.
 */
enum EnvkitStatus envkit_state_random(size_t d1,
                                      size_t d2,
                                      size_t rank,
                                      uint64_t denominator,
                                      uint64_t seed,
                                      struct EnvkitState **out);

/**
 * # Safety
 * `state` must be a live handle; `out` must be writable.
 */
enum EnvkitStatus envkit_state_to_json(const struct EnvkitState *state, char **out);

/**
 * # Safety
 * `state` must be a live handle; `d1` and `d2` must be writable.
 */
enum EnvkitStatus envkit_state_dims(const struct EnvkitState *state, size_t *d1, size_t *d2);

/**
 * Canonical Schmidt coefficients in descending order. `len` always receives
 * the count; `buffer` is filled only when `capacity` covers it.
 *
 * # Safety
 * `state` must be a live handle, `buffer` must hold `capacity` doubles
 * (it may be null when `capacity` is zero), and `len` must be writable.
 */
enum EnvkitStatus envkit_schmidt_coefficients(const struct EnvkitState *state,
                                              const char *tol,
                                              double *buffer,
                                              size_t capacity,
                                              size_t *len);

/**
 * # Safety
 * `state` must come from this library and not have been freed.
 */
void envkit_state_free(struct EnvkitState *state);

/**
 * Builds the subsystem picture of a state. `tol` is an optional
 * `name=value,...` list of tolerance overrides and may be null.
 *
 * # Safety
 * `state` must be a live handle; `tol` null or NUL-terminated; `out` writable.
 */
enum EnvkitStatus envkit_picture_new(const struct EnvkitState *state,
                                     const char *tol,
                                     struct EnvkitPicture **out);

/**
 * Coefficients, block structure and residuals of the picture as JSON.
 *
 * # Safety
 * `picture` must be a live handle; `out` must be writable.
 */
enum EnvkitStatus envkit_picture_to_json(const struct EnvkitPicture *picture, char **out);

/**
 * # Safety
 * `picture` must come from this library and not have been freed.
 */
void envkit_picture_free(struct EnvkitPicture *picture);

/**
 * Draws a random twin pair of the picture's state.
 *
 * # Safety
 * `picture` must be a live handle; `tol` null or NUL-terminated; `out` writable.
 */
enum EnvkitStatus envkit_twin_sample(const struct EnvkitPicture *picture,
                                     uint64_t seed,
                                     const char *tol,
                                     struct EnvkitTwin **out);

/**
 * Completes a JSON-encoded `U1` (`[[[re,im],..],..]`, row-major) to a twin
 * pair. Fails with [`EnvkitStatus::CertificationFailed`] when `U1` does not
 * commute with the reduced density operator.
 *
 * # Safety
 * `picture` must be a live handle; `u1_json` NUL-terminated; `tol` null or
 * NUL-terminated; `out` writable.
 */
enum EnvkitStatus envkit_twin_of(const struct EnvkitPicture *picture,
                                 const char *u1_json,
                                 const char *tol,
                                 struct EnvkitTwin **out);

/**
 * Parses a pair from `{"U1": .., "U2": ..}`.
 *
 * # Safety
 * `json` must be NUL-terminated; `out` writable.
 */
enum EnvkitStatus envkit_twin_from_json(const char *json, struct EnvkitTwin **out);

/**
 * # Safety
 * `twin` must be a live handle; `out` must be writable.
 */
enum EnvkitStatus envkit_twin_to_json(const struct EnvkitTwin *twin, char **out);

/**
 * Checks the pair against a state. `is_twin` receives 1 or 0 and `residual`
 * the norm of `(U1 (x) 1)psi - (1 (x) U2)psi`; with `allow_phase` nonzero a
 * global phase between the two sides is fitted first.
 *
 * # Safety
 * `twin` and `state` must be live handles; `tol` null or NUL-terminated;
 * `is_twin` and `residual` writable.
 */
enum EnvkitStatus envkit_twin_verify(const struct EnvkitTwin *twin,
                                     const struct EnvkitState *state,
                                     int32_t allow_phase,
                                     const char *tol,
                                     int32_t *is_twin,
                                     double *residual);

/**
 * # Safety
 * `twin` must come from this library and not have been freed.
 */
void envkit_twin_free(struct EnvkitTwin *twin);

/**
 * Runs a JSON scenario and returns its report as JSON. `exit_code` receives
 * the code the command-line tool would exit with. A report whose checks
 * failed still returns [`EnvkitStatus::Ok`] with a nonzero exit code.
 *
 * # Safety
 * `scenario_json` NUL-terminated; `tol` null or NUL-terminated; `report`
 * and `exit_code` writable.
 */
enum EnvkitStatus envkit_run_scenario(const char *scenario_json,
                                      const char *tol,
                                      char **report,
                                      int32_t *exit_code);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ENVKIT_H */
