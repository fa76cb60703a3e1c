#ifndef ISCHECK_H
#define ISCHECK_H

#include <stdbool.h>
#include <stddef.h>

// Result codes of the C API.
typedef enum IscStatus {
  ISC_STATUS_OK = 0,
  ISC_STATUS_NULL_ARGUMENT = 1,
  ISC_STATUS_INVALID_UTF8 = 2,
  ISC_STATUS_IO = 3,
  ISC_STATUS_CONTRACT_SYNTAX = 4,
  ISC_STATUS_CONTRACT_INVALID = 5,
  ISC_STATUS_FRONTEND = 6,
  ISC_STATUS_CRITICS = 7,
  ISC_STATUS_PANIC = 8,
} IscStatus;

// Final classification of a report; the values equal the CLI exit codes.
typedef enum IscVerdict {
  ISC_VERDICT_VERIFIED = 0,
  ISC_VERDICT_NOT_VERIFIED = 1,
  ISC_VERDICT_ERROR = 2,
} IscVerdict;

// A parsed and validated interface contract.
typedef struct IscContract IscContract;

// The outcome of checking one module.
typedef struct IscReport IscReport;

// Options for [`isc_check_module`]. A null pointer means all defaults.
typedef struct IscOptions {
  // Report typedef-rule findings as violations.
  bool strict_advisory;
  // Ignore `#include` directives that cannot be resolved.
  bool stub_missing_includes;
  // `include_dir_count` include search directories.
  const char *const *include_dirs;
  size_t include_dir_count;
} IscOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Parse and validate contract text. On success `*out` receives a handle.
//
// # Safety
// `text` must be a NUL-terminated string and `out` a valid pointer.
enum IscStatus isc_contract_parse(const char *text, struct IscContract **out);

// Render a contract as `.is` text into `*out`.
//
// # Safety
// `contract` must be a live handle and `out` a valid pointer.
enum IscStatus isc_contract_render(const struct IscContract *contract, char **out);

// # Safety
// `contract` must be null or a handle from [`isc_contract_parse`] not yet freed.
void isc_contract_free(struct IscContract *contract);

// Check a module (header and source paths) against an optional contract and
// store the report in `*out`.
//
// # Safety
// Paths must be NUL-terminated strings; `contract` and `options` may be null;
// `out` must be a valid pointer.
enum IscStatus isc_check_module(const char *header_path,
                                const char *source_path,
                                const struct IscContract *contract,
                                const struct IscOptions *options,
                                struct IscReport **out);

// Verdict of a report; [`IscVerdict::Error`] for a null handle.
//
// # Safety
// `report` must be null or a live handle.
enum IscVerdict isc_report_verdict(const struct IscReport *report);

// Serialize a report as JSON into `*out`. With `canonical`, the timestamp and
// durations are left out.
//
// # Safety
// `report` must be a live handle and `out` a valid pointer.
enum IscStatus isc_report_to_json(const struct IscReport *report, bool canonical, char **out);

// Render a report as human-readable text into `*out`.
//
// # Safety
// `report` must be a live handle and `out` a valid pointer.
enum IscStatus isc_report_to_text(const struct IscReport *report, bool canonical, char **out);

// # Safety
// `report` must be null or a handle from [`isc_check_module`] not yet freed.
void isc_report_free(struct IscReport *report);

// # Safety
// `s` must be null or a string returned by this library not yet freed.
void isc_string_free(char *s);

// Message for the last failed call on this thread, or an empty string. The
// pointer stays valid until the next API call on the same thread.
const char *isc_last_error_message(void);

// Library version as a static string.
const char *isc_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ISCHECK_H */
