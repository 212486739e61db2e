#ifndef CREDITFAIR_H
#define CREDITFAIR_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum CfStatus {
  CF_STATUS_OK = 0,
  CF_STATUS_NULL_POINTER = 1,
  CF_STATUS_INVALID_UTF8 = 2,
  /**
   * Malformed JSON or an unknown name.
   */
  CF_STATUS_PARSE = 3,
  /**
   * Input parsed but violates a model constraint.
   */
  CF_STATUS_INVALID = 4,
  /**
   * A mechanism or audit could not run on the input.
   */
  CF_STATUS_FAILED = 5,
  /**
   * A Rust panic was caught at the boundary.
   */
  CF_STATUS_PANIC = 6,
} CfStatus;

/**
 * An allocation instance: endowments and per-round reports.
 */
typedef struct CfInstance CfInstance;

/**
 * A mechanism run together with its instance.
 */
typedef struct CfTrace CfTrace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses an instance from JSON (`{"endowments": [...], "demands": [[...]]}`).
 *
 * # Safety
 * `json` must be a valid C string; `out` must be writable.
 */
enum CfStatus cf_instance_from_json(const char *json, struct CfInstance **out);

/**
 * Loads a built-in instance by name, e.g. `"motivating_example"`.
 *
 * # Safety
 * `name` must be a valid C string; `out` must be writable.
 */
enum CfStatus cf_instance_builtin(const char *name, struct CfInstance **out);

/**
 * Number of agents, or 0 for a null handle.
 *
 * # Safety
 * `inst` must be null or a live handle.
 */
size_t cf_instance_agents(const struct CfInstance *inst);

/**
 * Number of rounds, or 0 for a null handle.
 *
 * # Safety
 * `inst` must be null or a live handle.
 */
size_t cf_instance_rounds(const struct CfInstance *inst);

/**
 * # Safety
 * `inst` must be null or a handle not yet freed.
 */
void cf_instance_free(struct CfInstance *inst);

/**
 * Runs a mechanism (`"lendrecoup"`, `"smmf"`, `"dmmf"`, `"karma:1/2"`,
 * `"static"`) on the instance.
 *
 * # Safety
 * `inst` must be a live handle, `mechanism` a valid C string, `out` writable.
 */
enum CfStatus cf_run(const struct CfInstance *inst, const char *mechanism, struct CfTrace **out);

/**
 * Loads a trace document written by the CLI or [`cf_trace_to_json`].
 *
 * # Safety
 * `json` must be a valid C string; `out` must be writable.
 */
enum CfStatus cf_trace_from_json(const char *json, struct CfTrace **out);

/**
 * Serializes the trace document; free the result with [`cf_string_free`].
 *
 * # Safety
 * `trace` must be a live handle; `out` must be writable.
 */
enum CfStatus cf_trace_to_json(const struct CfTrace *trace, char **out);

/**
 * # Safety
 * `trace` must be null or a handle not yet freed.
 */
void cf_trace_free(struct CfTrace *trace);

/**
 * Checks the trace's own credit ledger against CF1 to CF5. `report_json`
 * may be null; otherwise it receives the full report.
 *
 * # Safety
 * `trace` must be a live handle; `passed` must be writable; `report_json`
 * must be null or writable.
 */
enum CfStatus cf_audit_explicit(const struct CfTrace *trace, bool *passed, char **report_json);

/**
 * Decides whether any credit ledger could make the trace credit fair.
 * `refuted` is set when none can; `verdict_json` may be null.
 *
 * # Safety
 * `trace` must be a live handle; `refuted` must be writable; `verdict_json`
 * must be null or writable.
 */
enum CfStatus cf_refute(const struct CfTrace *trace, bool *refuted, char **verdict_json);

/**
 * Solves a weighted water-filling problem given as JSON
 * (`{"capacity", "weights", "minima", "limits"}`, limits `null` when
 * unbounded) and returns `{"allocation", "level"}`.
 *
 * # Safety
 * `problem_json` must be a valid C string; `out` must be writable.
 */
enum CfStatus cf_pswc_solve_json(const char *problem_json, char **out);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must be null or a string from this library not yet freed.
 */
void cf_string_free(char *s);

/**
 * Message for the last failed call on this thread, or null. The pointer is
 * valid until the next call into this library on the same thread.
 */
const char *cf_last_error_message(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CREDITFAIR_H */
