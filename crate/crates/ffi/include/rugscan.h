#ifndef RUGSCAN_H
#define RUGSCAN_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes. Zero is success.
 */
typedef enum RugscanStatus {
  RUGSCAN_STATUS_OK = 0,
  RUGSCAN_STATUS_NULL_ARGUMENT = 1,
  RUGSCAN_STATUS_INVALID_UTF8 = 2,
  RUGSCAN_STATUS_INVALID_ARGUMENT = 3,
  RUGSCAN_STATUS_PARSE_ERROR = 4,
  /**
   * No data source configured, or the source failed.
   */
  RUGSCAN_STATUS_SOURCE_ERROR = 5,
  RUGSCAN_STATUS_DETECT_ERROR = 6,
  RUGSCAN_STATUS_PANIC = 7,
} RugscanStatus;

/**
 * Opaque engine: detector parameters plus an optional data source.
 * Calls that only read the engine may run concurrently from several
 * threads; `rugscan_engine_set_source` and `rugscan_engine_free` may not.
 */
typedef struct RugscanEngine RugscanEngine;

/**
 * Detector thresholds. Obtain defaults from [`rugscan_params_default`].
 */
typedef struct RugscanParams {
  double tau_active;
  double tau_down;
  double detection_window_hours;
  double post_remove_window_hours;
} RugscanParams;

typedef struct RugscanMetrics {
  double precision;
  double recall;
  double f1;
  double applicability;
  size_t tp;
  size_t fp;
  size_t tn;
  size_t fn_;
  size_t undecided;
} RugscanMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Default detector thresholds.
 */
struct RugscanParams rugscan_params_default(void);

/**
 * Library version, static storage.
 */
const char *rugscan_version(void);

/**
 * Message for the last failed call on this thread, or null. Valid until
 * the next library call on the same thread.
 */
const char *rugscan_last_error(void);

/**
 * Creates an engine. `params` may be null for defaults.
 *
 * # Safety
 * `params` is null or points to a valid struct; `out` is valid for writes.
 */
enum RugscanStatus rugscan_engine_new(const struct RugscanParams *params,
                                      struct RugscanEngine **out);

/**
 * Releases an engine. Null is ignored.
 *
 * # Safety
 * `engine` is null or came from `rugscan_engine_new` and is not used again.
 */
void rugscan_engine_free(struct RugscanEngine *engine);

/**
 * Attaches a data source: `rpc`, `explorer` or `fixture:<dir>`.
 * `rpc_url` and `cache_dir` may be null.
 *
 * # Safety
 * `engine` is a live engine; strings are null or NUL-terminated.
 */
enum RugscanStatus rugscan_engine_set_source(struct RugscanEngine *engine,
                                             const char *source,
                                             const char *rpc_url,
                                             const char *cache_dir);

/**
 * Classifies a token record given as JSON and writes the verdict JSON to
 * `*verdict_out`.
 *
 * # Safety
 * `engine` is a live engine, `record_json` NUL-terminated, `verdict_out`
 * valid for writes.
 */
enum RugscanStatus rugscan_classify_json(const struct RugscanEngine *engine,
                                         const char *record_json,
                                         char **verdict_out);

/**
 * Fetches `mint` from the engine's source and writes the verdict JSON to
 * `*verdict_out`.
 *
 * # Safety
 * As for `rugscan_classify_json`.
 */
enum RugscanStatus rugscan_scan(const struct RugscanEngine *engine,
                                const char *mint,
                                char **verdict_out);

/**
 * Metrics from raw confusion counts.
 *
 * # Safety
 * `out` is valid for writes.
 */
enum RugscanStatus rugscan_metrics_from_counts(size_t tp,
                                               size_t fp,
                                               size_t tn,
                                               size_t fn_,
                                               struct RugscanMetrics *out);

/**
 * Scores a JSON-lines report against a `mint,label[,kind]` CSV.
 *
 * # Safety
 * Strings are NUL-terminated; `out` is valid for writes.
 */
enum RugscanStatus rugscan_evaluate(const char *report_jsonl,
                                    const char *labels_csv,
                                    struct RugscanMetrics *out);

/**
 * Releases a string returned by the library. Null is ignored.
 *
 * # Safety
 * `s` is null or came from this library and is not used again.
 */
void rugscan_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RUGSCAN_H */
