#ifndef COMVE_H
#define COMVE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  COMVE_OBJECTIVE_ACCURACY = 0,
  COMVE_OBJECTIVE_F1 = 1,
} ComveObjective;

/**
 * Outcome of an FFI call.
 */
typedef enum {
  COMVE_STATUS_OK = 0,
  /**
   * A required pointer was null.
   */
  COMVE_STATUS_NULL_POINTER = 1,
  /**
   * An argument was malformed: bad UTF-8, a zero count, an unknown enum.
   */
  COMVE_STATUS_INVALID_ARGUMENT = 2,
  /**
   * A file could not be read or written.
   */
  COMVE_STATUS_IO = 3,
  /**
   * Input data failed validation.
   */
  COMVE_STATUS_INVALID = 4,
  /**
   * An external process broke its protocol.
   */
  COMVE_STATUS_CONTRACT = 5,
  /**
   * An internal panic was caught.
   */
  COMVE_STATUS_PANIC = 6,
} ComveStatus;

/**
 * Outcome of a subset search.
 */
typedef struct ComveEnsembleResult ComveEnsembleResult;

/**
 * Labels keyed by example id (gold answers or predictions).
 */
typedef struct ComveLabels ComveLabels;

/**
 * Per-option losses for three-way choice examples.
 */
typedef struct ComveLossTable ComveLossTable;

/**
 * Per-model class probabilities.
 */
typedef struct ComveProbMatrix ComveProbMatrix;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next call into this library from the same thread.
 */
const char *comve_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *comve_version(void);

/**
 * Free a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void comve_string_free(char *s);

/**
 * Corpus BLEU (0-100). `refs` holds `n * refs_per_hyp` entries, row by
 * row; null entries are skipped so hypotheses may have fewer references.
 *
 * # Safety
 * Arrays must hold the stated number of valid NUL-terminated strings.
 */
ComveStatus comve_corpus_bleu(const char *const *hyps,
                              size_t n,
                              const char *const *refs,
                              size_t refs_per_hyp,
                              double *out_score);

/**
 * Pearson correlation of two series of length `n`.
 *
 * # Safety
 * `xs` and `ys` must point to `n` doubles each.
 */
ComveStatus comve_pearson(const double *xs, const double *ys, size_t n, double *out_r);

/**
 * Normalize a sentence for round-trip comparison. The result must be
 * released with [`comve_string_free`].
 *
 * # Safety
 * `sentence` must be a valid NUL-terminated string.
 */
ComveStatus comve_normalize(const char *sentence, char **out);

/**
 * Build a probability matrix from `rows * classes` row-major values.
 *
 * # Safety
 * `ids` must hold `rows` strings and `values` `rows * classes` doubles.
 */
ComveStatus comve_prob_matrix_new(const char *model_id,
                                  const char *const *ids,
                                  const double *values,
                                  size_t rows,
                                  size_t classes,
                                  ComveProbMatrix **out);

/**
 * Load a probability file; the model id is the file stem.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string.
 */
ComveStatus comve_prob_matrix_load(const char *path, ComveProbMatrix **out);

/**
 * # Safety
 * `m` must come from this library and not have been freed. Null is ignored.
 */
void comve_prob_matrix_free(ComveProbMatrix *m);

/**
 * Labels from parallel arrays of ids and class indices.
 *
 * # Safety
 * `ids` and `labels` must hold `n` entries each.
 */
ComveStatus comve_labels_new(const char *const *ids,
                             const size_t *labels,
                             size_t n,
                             ComveLabels **out);

/**
 * Load an answers CSV (`id,label`) with labels in `0..classes`.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string.
 */
ComveStatus comve_labels_load_answers(const char *path, size_t classes, ComveLabels **out);

/**
 * Number of labels held.
 *
 * # Safety
 * `labels` must be a live handle.
 */
ComveStatus comve_labels_len(const ComveLabels *labels, size_t *out);

/**
 * Label of `id`; fails with `Invalid` when the id is absent.
 *
 * # Safety
 * `labels` must be a live handle and `id` a valid string.
 */
ComveStatus comve_labels_get(const ComveLabels *labels, const char *id, size_t *out);

/**
 * # Safety
 * `labels` must come from this library and not have been freed. Null is ignored.
 */
void comve_labels_free(ComveLabels *labels);

/**
 * Accuracy of `preds` against `golds`; both must cover the same ids.
 *
 * # Safety
 * Both handles must be live.
 */
ComveStatus comve_accuracy(const ComveLabels *preds, const ComveLabels *golds, double *out);

/**
 * Argmax predictions of a probability matrix.
 *
 * # Safety
 * `m` must be a live handle.
 */
ComveStatus comve_predict(const ComveProbMatrix *m, ComveLabels **out);

/**
 * Exhaustive search for the subset of models whose averaged probabilities
 * score best. `workers` 0 uses all cores; `max_members` 0 means no limit.
 *
 * # Safety
 * `matrices` must hold `k` live handles and `golds` must be live.
 */
ComveStatus comve_ensemble_search(const ComveProbMatrix *const *matrices,
                                  size_t k,
                                  const ComveLabels *golds,
                                  ComveObjective objective,
                                  size_t workers,
                                  size_t max_members,
                                  ComveEnsembleResult **out);

/**
 * Objective value of the best subset.
 *
 * # Safety
 * `r` must be a live handle.
 */
ComveStatus comve_ensemble_result_score(const ComveEnsembleResult *r, double *out);

/**
 * Number of subsets scored during the search.
 *
 * # Safety
 * `r` must be a live handle.
 */
ComveStatus comve_ensemble_result_subsets_evaluated(const ComveEnsembleResult *r, uint64_t *out);

/**
 * Number of models in the best subset.
 *
 * # Safety
 * `r` must be a live handle.
 */
ComveStatus comve_ensemble_result_member_count(const ComveEnsembleResult *r, size_t *out);

/**
 * Model id of member `i` (sorted order). The string is owned by the result.
 *
 * # Safety
 * `r` must be a live handle.
 */
ComveStatus comve_ensemble_result_member(const ComveEnsembleResult *r, size_t i, const char **out);

/**
 * Copy of the averaged probabilities of the best subset.
 *
 * # Safety
 * `r` must be a live handle.
 */
ComveStatus comve_ensemble_result_averaged(const ComveEnsembleResult *r, ComveProbMatrix **out);

/**
 * # Safety
 * `r` must come from this library and not have been freed. Null is ignored.
 */
void comve_ensemble_result_free(ComveEnsembleResult *r);

/**
 * Build a loss table from `n` ids and `3 * n` losses, row by row.
 *
 * # Safety
 * `ids` must hold `n` strings and `losses` `3 * n` doubles.
 */
ComveStatus comve_loss_table_new(const char *source_model,
                                 const char *const *ids,
                                 const double *losses,
                                 size_t n,
                                 ComveLossTable **out);

/**
 * Load a loss file; the source model is the file stem.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string.
 */
ComveStatus comve_loss_table_load(const char *path, ComveLossTable **out);

/**
 * # Safety
 * `t` must come from this library and not have been freed. Null is ignored.
 */
void comve_loss_table_free(ComveLossTable *t);

/**
 * Pick the option with the lowest loss for every row.
 *
 * # Safety
 * `t` must be a live handle.
 */
ComveStatus comve_select_by_min_loss(const ComveLossTable *t, ComveLabels **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COMVE_H */
