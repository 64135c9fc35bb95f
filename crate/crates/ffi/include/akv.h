/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef AKV_H
#define AKV_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AkvResponse {
  AKV_RESPONSE_SUCCESS = 0,
  AKV_RESPONSE_ERROR = 1,
  AKV_RESPONSE_CLARIFICATION_NEEDED = 2,
} AkvResponse;

typedef enum AkvStatus {
  AKV_STATUS_OK = 0,
  AKV_STATUS_NULL_ARGUMENT = 1,
  AKV_STATUS_INVALID_UTF8 = 2,
  AKV_STATUS_NOT_FOUND = 3,
  AKV_STATUS_INVALID = 4,
  AKV_STATUS_CAP_EXCEEDED = 5,
  AKV_STATUS_PANIC = 6,
} AkvStatus;

/**
 * A finished run with its trace.
 */
typedef struct AkvRun AkvRun;

/**
 * A loaded scenario.
 */
typedef struct AkvScenario AkvScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, a static string.
 */
const char *akv_version(void);

/**
 * Message for the most recent failure on this thread, or an empty string.
 */
const char *akv_last_error(void);

/**
 * Loads a builtin scenario by name.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum AkvStatus akv_scenario_builtin(const char *name, struct AkvScenario **out);

/**
 * Parses a scenario JSON document.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum AkvStatus akv_scenario_load(const char *json, struct AkvScenario **out);

/**
 * Overrides the simulation seed.
 *
 * # Safety
 * `scenario` must come from `akv_scenario_builtin` or `akv_scenario_load`.
 */
enum AkvStatus akv_scenario_set_seed(struct AkvScenario *scenario, uint64_t seed);

/**
 * # Safety
 * `scenario` must be null or an unfreed handle.
 */
void akv_scenario_free(struct AkvScenario *scenario);

/**
 * Runs the scenario's request to completion.
 *
 * # Safety
 * `scenario` must be a live handle and `out` a valid pointer.
 */
enum AkvStatus akv_run(const struct AkvScenario *scenario, struct AkvRun **out);

/**
 * # Safety
 * `run` must be a live handle and `out` a valid pointer.
 */
enum AkvStatus akv_run_status(const struct AkvRun *run, enum AkvResponse *out);

/**
 * The run's trace as JSON lines, owned by `run`. Null if `run` is null.
 *
 * # Safety
 * `run` must be null or a live handle.
 */
const char *akv_run_trace_jsonl(const struct AkvRun *run);

/**
 * # Safety
 * `run` must be null or an unfreed handle.
 */
void akv_run_free(struct AkvRun *run);

/**
 * Monitors the run's trace against a property selection such as `all`,
 * `HP9` or `TL1..TL14`, storing the number of violated instances.
 *
 * # Safety
 * `run` must be a live handle, `props` NUL-terminated, `violated` valid.
 */
enum AkvStatus akv_run_monitor(const struct AkvRun *run, const char *props, uint32_t *violated);

/**
 * Like `akv_run_monitor` for a JSON-lines trace document.
 *
 * # Safety
 * `trace` and `props` must be NUL-terminated, `violated` valid.
 */
enum AkvStatus akv_monitor_jsonl(const char *trace, const char *props, uint32_t *violated);

/**
 * Model-checks a property selection on a preset (`single`, `chain2`) or
 * the model of a builtin scenario, storing the number of failing
 * instances. A `cap` of 0 uses the default state cap.
 *
 * # Safety
 * `target` and `props` must be NUL-terminated, `failed` valid.
 */
enum AkvStatus akv_check(const char *target,
                         const char *props,
                         bool fair,
                         uint64_t cap,
                         uint32_t *failed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AKV_H */
