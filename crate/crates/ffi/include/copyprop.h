#ifndef COPYPROP_H
#define COPYPROP_H

/* Generated with cbindgen:0.29.4 */

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum {
  CP_STATUS_OK = 0,
  CP_STATUS_NULL_ARGUMENT = 1,
  CP_STATUS_INVALID_UTF8 = 2,
  CP_STATUS_PARSE_ERROR = 3,
  /**
   * A check ran and found a counterexample or violation.
   */
  CP_STATUS_CHECK_FAILED = 4,
  CP_STATUS_PANIC = 5,
} CpStatus;

/**
 * Opaque program handle.
 */
typedef struct CpProgram CpProgram;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. Valid until the
 * next call into this library from the same thread.
 */
const char *cp_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *cp_version(void);

/**
 * Parses and validates a program in the text format.
 *
 * # Safety
 * `text` must be a valid NUL-terminated string and `out` a valid pointer.
 */
CpStatus cp_program_parse(const char *text, CpProgram **out);

/**
 * Releases a handle. NULL is ignored.
 *
 * # Safety
 * `p` must come from this library and not be used afterwards.
 */
void cp_program_free(CpProgram *p);

/**
 * Releases a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void cp_string_free(char *s);

/**
 * Number of blocks, or 0 for NULL.
 *
 * # Safety
 * `p` must be NULL or a live handle.
 */
size_t cp_program_block_count(const CpProgram *p);

/**
 * Canonical text form.
 *
 * # Safety
 * `p` must be a live handle and `out` a valid pointer.
 */
CpStatus cp_program_print(const CpProgram *p, char **out);

/**
 * Per-block IN sets (and OUT sets when `include_out`), one line each.
 *
 * # Safety
 * `p` must be a live handle and `out` a valid pointer.
 */
CpStatus cp_analyze(const CpProgram *p, bool include_out, char **out);

/**
 * Propagates copies and constants. `max_rounds` 0 runs the single pass;
 * otherwise analysis and rewriting repeat up to that many rounds. The new
 * program is returned as a fresh handle; `out_replacements` may be NULL.
 *
 * # Safety
 * `p` must be a live handle, `out_program` a valid pointer, and
 * `out_replacements` NULL or valid.
 */
CpStatus cp_transform(const CpProgram *p,
                      uint32_t max_rounds,
                      CpProgram **out_program,
                      size_t *out_replacements);

/**
 * Replacement counts of the classic and unified single passes. Returns
 * `CP_STATUS_CHECK_FAILED` if a classic rewrite is not dominated.
 *
 * # Safety
 * `p` must be a live handle; the count pointers must be valid.
 */
CpStatus cp_compare(const CpProgram *p, size_t *out_classic, size_t *out_unified);

/**
 * Graphviz text, optionally annotated with IN sets and/or of the
 * transformed program.
 *
 * # Safety
 * `p` must be a live handle and `out` a valid pointer.
 */
CpStatus cp_to_dot(const CpProgram *p, bool annotate, bool transformed, char **out);

/**
 * Differential check of both transform variants on `inputs` random
 * environments derived from `seed`. Returns `CP_STATUS_CHECK_FAILED` with
 * the counterexample in `cp_last_error` on failure.
 *
 * # Safety
 * `p` must be a live handle.
 */
CpStatus cp_check(const CpProgram *p, uint32_t inputs, uint64_t seed, uint64_t fuel);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COPYPROP_H */
