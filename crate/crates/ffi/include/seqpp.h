#ifndef SEQPP_H
#define SEQPP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SeqppStatus {
  SEQPP_STATUS_OK = 0,
  SEQPP_STATUS_NULL_POINTER = 1,
  SEQPP_STATUS_INVALID_UTF8 = 2,
  SEQPP_STATUS_ARGUMENT = 3,
  SEQPP_STATUS_NUMERIC = 4,
  SEQPP_STATUS_CONTRACT = 5,
  SEQPP_STATUS_DOMAIN = 6,
  SEQPP_STATUS_CAPACITY = 7,
  SEQPP_STATUS_LOOKUP = 8,
  SEQPP_STATUS_UNSUPPORTED = 9,
  SEQPP_STATUS_DEGENERATE = 10,
  SEQPP_STATUS_CONFIG = 11,
  SEQPP_STATUS_IO = 12,
  SEQPP_STATUS_PANIC = 13,
} SeqppStatus;

// Opaque model handle.
typedef struct SeqppModel SeqppModel;

// Opaque point sequence handle.
typedef struct SeqppSequence SeqppSequence;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or NULL. The pointer
// stays valid until the next failing call on the same thread.
const char *seqpp_last_error(void);

// Library version as a static NUL-terminated string.
const char *seqpp_version(void);

// Builds a model from the JSON of a `"model"` object, e.g.
// `{"kind": "softcore", ...}`.
//
// # Safety
// `json` must be a valid NUL-terminated string and `out` a valid pointer.
enum SeqppStatus seqpp_model_from_json(const char *json, struct SeqppModel **out);

// # Safety
// `model` must come from [`seqpp_model_from_json`] and not be freed twice.
void seqpp_model_free(struct SeqppModel *model);

// Writes `log f(y)`; zero density is `-inf`.
//
// # Safety
// Arrays must hold `n` readable doubles (`radii` may be NULL).
enum SeqppStatus seqpp_log_density(const struct SeqppModel *model,
                                   const double *xs,
                                   const double *ys,
                                   const double *radii,
                                   uintptr_t n,
                                   double *out);

// Writes the sequential conditional intensity of inserting `(ux, uy, ur)`
// at 1-based `position` in `y`.
//
// # Safety
// Arrays must hold `n` readable doubles (`radii` may be NULL).
enum SeqppStatus seqpp_conditional_intensity(const struct SeqppModel *model,
                                             const double *xs,
                                             const double *ys,
                                             const double *radii,
                                             uintptr_t n,
                                             uintptr_t position,
                                             double ux,
                                             double uy,
                                             double ur,
                                             double *out);

// Declared local stability bound, or NaN when the model declares none.
//
// # Safety
// `model` must be a live handle.
enum SeqppStatus seqpp_model_stability_bound(const struct SeqppModel *model, double *out);

// Runs `steps` Metropolis-Hastings steps from the empty sequence and
// returns the final state.
//
// # Safety
// `model` must be a live handle and `out` a valid pointer.
enum SeqppStatus seqpp_mh_run(const struct SeqppModel *model,
                              uint64_t steps,
                              uint64_t seed,
                              struct SeqppSequence **out);

// Runs the birth-death process to `t_max` from the empty sequence. A
// non-positive or NaN `beta` uses the model's declared bound.
//
// # Safety
// `model` must be a live handle and `out` a valid pointer.
enum SeqppStatus seqpp_bd_run(const struct SeqppModel *model,
                              double beta,
                              double t_max,
                              uint64_t seed,
                              struct SeqppSequence **out);

// Number of points in `seq`; 0 for NULL.
//
// # Safety
// `seq` must be NULL or a live handle.
uintptr_t seqpp_sequence_len(const struct SeqppSequence *seq);

// Reads the point at 0-based `index`. Unmarked points report a NaN radius.
//
// # Safety
// `seq` must be a live handle; output pointers must be valid.
enum SeqppStatus seqpp_sequence_get(const struct SeqppSequence *seq,
                                    uintptr_t index,
                                    double *x,
                                    double *y,
                                    double *radius);

// # Safety
// `seq` must come from a run function and not be freed twice.
void seqpp_sequence_free(struct SeqppSequence *seq);

// Runs the exact oracle checks for a full run configuration (JSON) and
// returns the report as a JSON string, to be released with
// [`seqpp_string_free`]. `passed` receives 1 when every check passed.
//
// # Safety
// `config_json` must be a valid NUL-terminated string; outputs must be valid.
enum SeqppStatus seqpp_validate(const char *config_json, char **report_json, int32_t *passed);

// # Safety
// `s` must come from this library and not be freed twice.
void seqpp_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SEQPP_H */
