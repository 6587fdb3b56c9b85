#ifndef SELFORG_H
#define SELFORG_H

#pragma once

/* Generated by cbindgen from selforg-ffi. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes of every fallible call.
 */
typedef enum SelforgStatus {
  SELFORG_STATUS_OK = 0,
  SELFORG_STATUS_NULL_POINTER = 1,
  SELFORG_STATUS_INVALID_UTF8 = 2,
  SELFORG_STATUS_CONFIG_ERROR = 3,
  SELFORG_STATUS_CONVERGENCE_FAILURE = 4,
  SELFORG_STATUS_TRUNCATION_FAIL = 5,
  SELFORG_STATUS_IO_ERROR = 6,
  SELFORG_STATUS_NOT_FOUND = 7,
  SELFORG_STATUS_PANIC = 8,
} SelforgStatus;

/**
 * Opaque result of one run.
 */
typedef struct SelforgRun SelforgRun;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses `config_json`, runs its task and stores the dataset in `*out`.
 *
 * A run whose solver gave up still yields a handle; its state is reported
 * by [`selforg_run_status`].
 *
 * # Safety
 * `config_json` is a NUL-terminated string and `out` a writable pointer.
 */
enum SelforgStatus selforg_run_config(const char *config_json,
                                      int reproducible,
                                      struct SelforgRun **out);

/**
 * `Ok`, `ConvergenceFailure` or `TruncationFail` for a finished run.
 *
 * # Safety
 * `run` is null or a handle from [`selforg_run_config`].
 */
enum SelforgStatus selforg_run_status(const struct SelforgRun *run);

/**
 * Largest populations of the top photon level and of the top particle
 * modes seen during the run.
 *
 * # Safety
 * `run` is a valid handle; the outputs are writable.
 */
enum SelforgStatus selforg_run_truncation(const struct SelforgRun *run,
                                          double *top_photon,
                                          double *top_mode);

/**
 * Contents of the payload `name` (e.g. `"steady.csv"`), owned by the handle.
 *
 * # Safety
 * `run` is a valid handle, `name` a NUL-terminated string and `out` writable.
 */
enum SelforgStatus selforg_run_file(const struct SelforgRun *run,
                                    const char *name,
                                    const char **out);

/**
 * Metadata JSON; release with [`selforg_string_free`].
 *
 * # Safety
 * `run` is a valid handle and `out` writable.
 */
enum SelforgStatus selforg_run_metadata(const struct SelforgRun *run, char **out);

/**
 * Writes `metadata.json` and all payloads below `dir`.
 *
 * # Safety
 * `run` is a valid handle and `dir` a NUL-terminated path.
 */
enum SelforgStatus selforg_run_write(const struct SelforgRun *run, const char *dir);

/**
 * # Safety
 * `run` is null or a handle from [`selforg_run_config`] not freed before.
 */
void selforg_run_free(struct SelforgRun *run);

/**
 * # Safety
 * `s` is null or a string returned by this library for the caller to free.
 */
void selforg_string_free(char *s);

/**
 * Message of the last failure on this thread, or null. Valid until the next
 * call into the library from the same thread.
 */
const char *selforg_last_error(void);

/**
 * Library version as a static string.
 */
const char *selforg_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SELFORG_H */
