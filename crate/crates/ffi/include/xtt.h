#ifndef XTT_H
#define XTT_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

// Result code of every fallible call.
typedef enum XttStatus {
  XTT_STATUS_OK = 0,
  // A required pointer argument was null.
  XTT_STATUS_NULL_ARGUMENT = 1,
  // A string argument was not valid UTF-8.
  XTT_STATUS_INVALID_UTF8 = 2,
  // The model document could not be parsed.
  XTT_STATUS_PARSE_ERROR = 3,
  // The model or an input valuation failed validation.
  XTT_STATUS_INVALID_MODEL = 4,
  // Inference finished with error diagnostics (deadlock, xor-stuck, ...).
  XTT_STATUS_RUNTIME_ERROR = 5,
  // The model cannot be exported to the requested format.
  XTT_STATUS_EXPORT_ERROR = 6,
  // Analysis refused the model, e.g. the state space exceeds the bound.
  XTT_STATUS_ANALYSIS_ERROR = 7,
  // The goal attribute or table name is unknown.
  XTT_STATUS_NOT_FOUND = 8,
  // An internal error; the library state is still usable.
  XTT_STATUS_PANIC = 9,
} XttStatus;

// Opaque handle to a parsed model.
typedef struct XttModel XttModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Parses a JSON model document. On success `*out` receives a handle to be
// released with [`xtt_model_free`].
//
// # Safety
// `document` must be a NUL-terminated string; `out` must be writable.
enum XttStatus xtt_model_parse(const char *document, struct XttModel **out);

// Releases a model handle. Null is ignored.
//
// # Safety
// `model` must come from [`xtt_model_parse`] and not be used afterwards.
void xtt_model_free(struct XttModel *model);

// Validates the model. `*diagnostics` (optional) receives one line per
// finding. Returns `XTT_STATUS_INVALID_MODEL` when any finding is an error.
//
// # Safety
// `model` must be a live handle; `diagnostics` may be null.
enum XttStatus xtt_model_validate(const struct XttModel *model, char **diagnostics);

// Writes the canonical JSON form of the model into `*out`.
//
// # Safety
// `model` must be a live handle; `out` must be writable.
enum XttStatus xtt_model_serialize(const struct XttModel *model, char **out);

// Runs inference. `bindings` holds `attr=value` entries separated by
// newlines (may be null or empty). With a non-null `goal` the run is
// goal-driven. `*valuation` receives the final valuation as sorted
// `attr=value` lines and `*trace` (optional) the numbered trace.
//
// A run that ends with error diagnostics still fills both outputs and
// returns `XTT_STATUS_RUNTIME_ERROR`.
//
// # Safety
// `model` must be a live handle; string arguments NUL-terminated or null
// where allowed; `valuation` writable; `trace` may be null.
enum XttStatus xtt_run_forward(const struct XttModel *model,
                               const char *bindings,
                               const char *goal,
                               char **valuation,
                               char **trace);

// Produces the ruleflow XML, decision-table CSV and `Workspace` source.
// Outputs are left untouched unless the export succeeds.
//
// # Safety
// `model` must be a live handle; the three output pointers writable.
enum XttStatus xtt_export_drools(const struct XttModel *model,
                                 char **ruleflow_xml,
                                 char **decision_table_csv,
                                 char **workspace_source);

// Exports BPMN XML. With `table` null the whole flow is mapped one task per
// table; otherwise the named table is drawn one branch per rule.
//
// # Safety
// `model` must be a live handle; `table` NUL-terminated or null; `out`
// writable.
enum XttStatus xtt_export_bpmn(const struct XttModel *model, const char *table, char **out);

// Completeness, overlap and reachability report, one defect per line, using
// `state_bound` as the per-table state limit (0 selects the default).
// `*defects` (optional) receives the number of lines.
//
// # Safety
// `model` must be a live handle; `report` writable; `defects` may be null.
enum XttStatus xtt_analyze(const struct XttModel *model,
                           uint64_t state_bound,
                           char **report,
                           size_t *defects);

// Message of the last failed call on this thread, or null. The pointer stays
// valid until the next call into this library on the same thread.
const char *xtt_last_error_message(void);

// Releases a string returned through an output parameter. Null is ignored.
//
// # Safety
// `s` must come from this library and not be used afterwards.
void xtt_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* XTT_H */
