#ifndef PETRICOV_H
#define PETRICOV_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PetricovAlgorithm {
  PETRICOV_ALGORITHM_BACKWARD = 0,
  PETRICOV_ALGORITHM_QCOVER = 1,
  PETRICOV_ALGORITHM_TRAPCEGAR = 2,
  PETRICOV_ALGORITHM_QREACH_ONLY = 3,
} PetricovAlgorithm;

typedef enum PetricovFormat {
  PETRICOV_FORMAT_MIST = 0,
  PETRICOV_FORMAT_JSON = 1,
} PetricovFormat;

typedef enum PetricovStatus {
  PETRICOV_STATUS_OK = 0,
  PETRICOV_STATUS_NULL_ARGUMENT = 1,
  PETRICOV_STATUS_INVALID_UTF8 = 2,
  PETRICOV_STATUS_PARSE_ERROR = 3,
  PETRICOV_STATUS_DIMENSION_MISMATCH = 4,
  PETRICOV_STATUS_INVALID_ARGUMENT = 5,
  PETRICOV_STATUS_PANIC = 6,
} PetricovStatus;

typedef enum PetricovVerdict {
  PETRICOV_VERDICT_SAFE = 0,
  PETRICOV_VERDICT_UNSAFE = 2,
  PETRICOV_VERDICT_UNKNOWN = 3,
} PetricovVerdict;

/**
 * An instance: net, initial marking and targets.
 */
typedef struct PetricovInstance PetricovInstance;

/**
 * Search settings. Obtain defaults from [`petricov_options_default`].
 */
typedef struct PetricovOptions {
  bool use_minbottle;
  size_t c;
  size_t k;
  /**
   * Seconds; zero or negative means no limit.
   */
  double timeout_secs;
  /**
   * Zero means no limit.
   */
  size_t max_iterations;
  bool sparse_pivots;
} PetricovOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

struct PetricovOptions petricov_options_default(void);

/**
 * Parses `text` into a new instance stored in `*out`.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum PetricovStatus petricov_instance_parse(const char *text,
                                            enum PetricovFormat format,
                                            struct PetricovInstance **out);

/**
 * # Safety
 * `inst` must come from [`petricov_instance_parse`] and not be freed yet,
 * or be null.
 */
void petricov_instance_free(struct PetricovInstance *inst);

/**
 * # Safety
 * `inst` must be a live handle or null.
 */
size_t petricov_instance_num_places(const struct PetricovInstance *inst);

/**
 * # Safety
 * `inst` must be a live handle or null.
 */
size_t petricov_instance_num_transitions(const struct PetricovInstance *inst);

/**
 * Decides the instance. With a non-null `report`, also hands out the JSON
 * report (release it with [`petricov_string_free`]).
 *
 * # Safety
 * `inst` must be a live handle, `options` null or valid, `verdict_out`
 * valid, and `report` null or valid.
 */
enum PetricovStatus petricov_check(const struct PetricovInstance *inst,
                                   enum PetricovAlgorithm algorithm,
                                   const struct PetricovOptions *options,
                                   enum PetricovVerdict *verdict_out,
                                   char **report);

/**
 * Whether some marking covering `target` (length = number of places) is
 * reachable from the initial marking under the continuous semantics.
 *
 * # Safety
 * `inst` must be a live handle, `target` must point to `len` values and
 * `out` must be valid.
 */
enum PetricovStatus petricov_q_coverable(const struct PetricovInstance *inst,
                                         const uint64_t *target,
                                         size_t len,
                                         bool *out);

/**
 * The SMT-LIB cover query for the instance's targets.
 *
 * # Safety
 * `inst` must be a live handle and `out` valid.
 */
enum PetricovStatus petricov_emit_smt(const struct PetricovInstance *inst, char **out);

/**
 * # Safety
 * `s` must be a string handed out by this library, or null.
 */
void petricov_string_free(char *s);

/**
 * The message of the last failed call on this thread, or null. Valid until
 * the next call into the library on the same thread.
 */
const char *petricov_last_error(void);

const char *petricov_version(void);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* PETRICOV_H */
