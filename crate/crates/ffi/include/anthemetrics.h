#ifndef ANTHEMETRICS_H
#define ANTHEMETRICS_H

/* Generated by cbindgen from the anthemetrics-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * The eight per-anthem features, in feature-store column order.
 */
typedef enum NaFeature {
  NA_FEATURE_MELODIC_CONTOUR_MEAN = 0,
  NA_FEATURE_PITCH_MODE = 1,
  NA_FEATURE_BEAT_ONSET_DENSITY = 2,
  NA_FEATURE_TEMPO_BPM = 3,
  NA_FEATURE_VELOCITY_MEDIAN = 4,
  NA_FEATURE_NOTE_DURATION_MEAN = 5,
  NA_FEATURE_REST_DURATION_MEDIAN = 6,
  NA_FEATURE_TIME_SIGNATURE_CHANGES = 7,
} NaFeature;

/**
 * Status codes returned by every fallible entry point.
 */
typedef enum NaStatus {
  NA_STATUS_OK = 0,
  /**
   * A required pointer was null or an argument was out of domain.
   */
  NA_STATUS_INVALID_ARGUMENT = 1,
  /**
   * The bytes are not a usable Standard MIDI File.
   */
  NA_STATUS_PARSE_ERROR = 2,
  /**
   * The file parsed but holds no playable notes.
   */
  NA_STATUS_EMPTY_PERFORMANCE = 3,
  /**
   * Feature extraction failed (degenerate or out-of-range values).
   */
  NA_STATUS_FEATURE_ERROR = 4,
  /**
   * Filesystem or configuration failure.
   */
  NA_STATUS_IO_ERROR = 5,
  /**
   * The pipeline ran but failed partway; see the error message.
   */
  NA_STATUS_PIPELINE_ERROR = 6,
  /**
   * The pipeline completed with some corpus files dropped.
   */
  NA_STATUS_PARTIAL_SUCCESS = 7,
  /**
   * A panic was caught at the FFI boundary.
   */
  NA_STATUS_INTERNAL_PANIC = 8,
} NaStatus;

/**
 * Opaque handle to one anthem's extracted feature vector.
 */
typedef struct NaFeatureSet NaFeatureSet;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string; do not free.
 */
const char *na_version(void);

/**
 * Returns a copy of the last error message on this thread, or null when no
 * error is recorded. Free the copy with [`na_string_free`].
 */
char *na_last_error_message(void);

/**
 * Frees a string returned by this library. Null is a no-op.
 *
 * # Safety
 * `s` must be a pointer previously returned by an `anthemetrics` function
 * that documents [`na_string_free`] ownership, and not freed before.
 */
void na_string_free(char *s);

/**
 * Parses SMF bytes and extracts the eight-feature vector for `country`.
 *
 * On success writes a handle to `out` and returns `NA_STATUS_OK`; the
 * handle must be released with [`na_feature_set_free`].
 *
 * # Safety
 * `bytes` must point to `len` readable bytes, `country` to a
 * NUL-terminated string, and `out` to writable handle storage.
 */
enum NaStatus na_features_from_smf(const uint8_t *bytes,
                                   size_t len,
                                   const char *country,
                                   struct NaFeatureSet **out);

/**
 * Reads one numeric feature from the handle.
 *
 * # Safety
 * `set` must be a live handle from [`na_features_from_smf`]; `out` must be
 * writable.
 */
enum NaStatus na_feature_set_value(const struct NaFeatureSet *set,
                                   enum NaFeature feature,
                                   double *out);

/**
 * The handle's canonical country name; free with [`na_string_free`].
 *
 * # Safety
 * `set` must be a live handle from [`na_features_from_smf`].
 */
char *na_feature_set_country(const struct NaFeatureSet *set);

/**
 * The full feature vector as a JSON object; free with [`na_string_free`].
 *
 * # Safety
 * `set` must be a live handle from [`na_features_from_smf`].
 */
char *na_feature_set_to_json(const struct NaFeatureSet *set);

/**
 * Releases a feature-set handle. Null is a no-op.
 *
 * # Safety
 * `set` must be a handle from [`na_features_from_smf`], not yet freed.
 */
void na_feature_set_free(struct NaFeatureSet *set);

/**
 * Runs the full pipeline from a TOML config file path. Artifacts and the
 * run manifest are written to the configured output directory.
 *
 * Returns `NA_STATUS_OK` on a clean run, `NA_STATUS_PARTIAL_SUCCESS` when
 * some corpus files were dropped, and an error status otherwise.
 *
 * # Safety
 * `config_path` must be a NUL-terminated string.
 */
enum NaStatus na_run_pipeline(const char *config_path);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* ANTHEMETRICS_H */
