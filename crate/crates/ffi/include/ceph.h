#ifndef CEPH_H
#define CEPH_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CephStatus {
  CEPH_STATUS_OK = 0,
  CEPH_STATUS_NULL_POINTER = 1,
  CEPH_STATUS_INVALID_UTF8 = 2,
  CEPH_STATUS_PARSE_ERROR = 3,
  CEPH_STATUS_MISSING_CALIBRATION = 4,
  CEPH_STATUS_MISSING_LANDMARK = 5,
  CEPH_STATUS_DEGENERATE = 6,
  CEPH_STATUS_OUT_OF_BOUNDS = 7,
  CEPH_STATUS_NOT_COMPUTED = 8,
  CEPH_STATUS_INVALID_ARGUMENT = 9,
  CEPH_STATUS_INTERNAL = 99,
} CephStatus;

typedef enum CephSagittalClass {
  CEPH_SAGITTAL_CLASS_UNAVAILABLE = 0,
  CEPH_SAGITTAL_CLASS_CLASS_I = 1,
  CEPH_SAGITTAL_CLASS_CLASS_II = 2,
  CEPH_SAGITTAL_CLASS_CLASS_III = 3,
} CephSagittalClass;

/**
 * Opaque handle to a completed analysis.
 */
typedef struct CephAnalysis CephAnalysis;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static nul-terminated string.
 */
const char *ceph_version(void);

/**
 * Message for the last failed call on this thread, or null after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *ceph_last_error_message(void);

/**
 * Parses a JSON landmark document and analyzes it with the built-in norms.
 *
 * # Safety
 * `json` must be null or a valid nul-terminated string; `out` must be null or writable.
 */
enum CephStatus ceph_analysis_from_json(const char *json, struct CephAnalysis **out);

/**
 * # Safety
 * `analysis` must be null or a handle from [`ceph_analysis_from_json`] not yet freed.
 */
void ceph_analysis_free(struct CephAnalysis *analysis);

/**
 * Value of one measurement by its identifier, e.g. `"ANB"`. Degrees or millimetres.
 *
 * # Safety
 * Pointers must be null or valid.
 */
enum CephStatus ceph_analysis_measurement(const struct CephAnalysis *analysis,
                                          const char *id,
                                          double *out);

/**
 * # Safety
 * Pointers must be null or valid.
 */
enum CephStatus ceph_analysis_sagittal_class(const struct CephAnalysis *analysis,
                                             enum CephSagittalClass *out);

/**
 * Full analysis as pretty JSON.
 *
 * # Safety
 * Pointers must be null or valid.
 */
enum CephStatus ceph_analysis_to_json(const struct CephAnalysis *analysis, char **out);

/**
 * Diagnostic report. `lang` is `"en"` or `"zh"`; `format` is `"text"`,
 * `"markdown"` or `"structured"`.
 *
 * # Safety
 * Pointers must be null or valid.
 */
enum CephStatus ceph_analysis_report(const struct CephAnalysis *analysis,
                                     const char *lang,
                                     const char *format,
                                     char **out);

/**
 * Instruction-tuning prompt chosen deterministically from `seed`.
 *
 * # Safety
 * Pointers must be null or valid.
 */
enum CephStatus ceph_analysis_prompt(const struct CephAnalysis *analysis,
                                     const char *lang,
                                     uint64_t seed,
                                     char **out);

/**
 * Angle in degrees at `(vx, vy)` between the rays to the two other points.
 *
 * # Safety
 * `out` must be null or writable.
 */
enum CephStatus ceph_angle_at_vertex(double vx,
                                     double vy,
                                     double x1,
                                     double y1,
                                     double x2,
                                     double y2,
                                     double *out);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void ceph_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CEPH_H */
