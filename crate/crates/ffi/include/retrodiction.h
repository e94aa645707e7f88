#ifndef RETRODICTION_H
#define RETRODICTION_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes. Values 2 to 5 match the command-line exit codes.
 */
typedef enum RdStatus {
  RD_STATUS_OK = 0,
  RD_STATUS_NULL_POINTER = 1,
  RD_STATUS_PARSE = 2,
  RD_STATUS_VALIDATION = 3,
  RD_STATUS_UNDEFINED_CONDITIONAL = 4,
  RD_STATUS_VERIFICATION_FAILED = 5,
  RD_STATUS_OUT_OF_RANGE = 6,
  RD_STATUS_PANIC = 7,
} RdStatus;

/**
 * A validated scenario.
 */
typedef struct RdScenario RdScenario;

/**
 * A conditional probability table.
 */
typedef struct RdTable RdTable;

/**
 * Channel properties reported by [`rd_scenario_classify`].
 */
typedef struct RdClassification {
  bool is_cp;
  bool is_tp;
  bool is_unital;
  bool inference_symmetric;
  bool active_reverse;
  double unital_defect;
  double choi_min_eigenvalue;
} RdClassification;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer
 * stays valid until the next `rd_*` call on the same thread.
 */
const char *rd_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *rd_version(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library and not yet freed.
 */
void rd_string_free(char *s);

/**
 * Parse and validate a scenario document.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum RdStatus rd_scenario_from_json(const char *json, struct RdScenario **out);

/**
 * # Safety
 * `scenario` must be NULL or a handle from [`rd_scenario_from_json`].
 */
void rd_scenario_free(struct RdScenario *scenario);

/**
 * Prediction table given input outcome indices, one per input factor in
 * play.
 *
 * # Safety
 * `scenario` must be a live handle, `given` must point to `given_len`
 * values, and `out` must be writable.
 */
enum RdStatus rd_scenario_predict(const struct RdScenario *scenario,
                                  const size_t *given,
                                  size_t given_len,
                                  struct RdTable **out);

/**
 * Postdiction table given output outcome indices, one per output factor
 * in play.
 *
 * # Safety
 * As for [`rd_scenario_predict`].
 */
enum RdStatus rd_scenario_postdict(const struct RdScenario *scenario,
                                   const size_t *given,
                                   size_t given_len,
                                   struct RdTable **out);

/**
 * Classify the scenario's transformation as a channel.
 *
 * # Safety
 * `scenario` must be a live handle and `out` writable.
 */
enum RdStatus rd_scenario_classify(const struct RdScenario *scenario, struct RdClassification *out);

/**
 * Identity checks applicable to the scenario. A negative `tolerance_override`
 * keeps the defaults. When `out_json` is non-NULL it receives the report,
 * also on verification failure.
 *
 * # Safety
 * `scenario` must be a live handle; `out_json` NULL or writable.
 */
enum RdStatus rd_scenario_verify(const struct RdScenario *scenario,
                                 uint64_t seed,
                                 double tolerance_override,
                                 char **out_json);

/**
 * Identity suite on seeded random instances over subsystem dimensions
 * `dims`.
 *
 * # Safety
 * `dims` must point to `dims_len` values; `out_json` NULL or writable.
 */
enum RdStatus rd_verify_random(const size_t *dims,
                               size_t dims_len,
                               uint64_t seed,
                               double tolerance_override,
                               char **out_json);

/**
 * # Safety
 * `table` must be NULL or a handle returned by this library.
 */
void rd_table_free(struct RdTable *table);

/**
 * Number of entries; 0 for NULL.
 *
 * # Safety
 * `table` must be NULL or a live handle.
 */
size_t rd_table_len(const struct RdTable *table);

/**
 * # Safety
 * `table` must be a live handle and `out` writable.
 */
enum RdStatus rd_table_probability(const struct RdTable *table, size_t index, double *out);

/**
 * Outcome label at `index` as a new string, or NULL on error.
 *
 * # Safety
 * `table` must be a live handle.
 */
char *rd_table_label(const struct RdTable *table, size_t index);

/**
 * Ratio `P_post / P_pre` for postdiction tables that have one. Writes NaN
 * when the table carries no factor.
 *
 * # Safety
 * `table` must be a live handle and `out` writable.
 */
enum RdStatus rd_table_factor(const struct RdTable *table, double *out);

/**
 * The table as JSON, or NULL for a NULL handle.
 *
 * # Safety
 * `table` must be NULL or a live handle.
 */
char *rd_table_to_json(const struct RdTable *table);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RETRODICTION_H */
