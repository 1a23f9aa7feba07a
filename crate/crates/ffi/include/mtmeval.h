#ifndef MTMEVAL_H
#define MTMEVAL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every exported function.
typedef enum MtmStatus {
  MTM_STATUS_OK = 0,
  MTM_STATUS_NULL_POINTER = 1,
  MTM_STATUS_INVALID_ARGUMENT = 2,
  // malformed input file or text
  MTM_STATUS_PARSE = 3,
  // well-formed input that cannot support the computation
  MTM_STATUS_DATA = 4,
  // the statistic is undefined for this input (e.g. constant scores)
  MTM_STATUS_UNDEFINED = 5,
  // NaN or infinity encountered
  MTM_STATUS_NUMERIC = 6,
  MTM_STATUS_IO = 7,
  MTM_STATUS_PANIC = 8,
} MtmStatus;

// Loaded evaluation corpus.
typedef struct MtmCorpus MtmCorpus;

// Loaded sequence scorer.
typedef struct MtmScorer MtmScorer;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message describing the last failed call on this thread, or null. Valid
// until the next call into the library from the same thread.
const char *mtm_last_error(void);

// Library version as a static NUL-terminated string.
const char *mtm_version(void);

// Frees a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not have been freed already.
void mtm_string_free(char *s);

// Kendall tau-b between two score vectors oriented the same way.
//
// # Safety
// `a` and `b` must point to `n` readable doubles; `out` must be writable.
enum MtmStatus mtm_kendall_tau(const double *a, const double *b, size_t n, double *out);

// Segment-level tau between metric scores and MQM penalties (lower is
// better); penalties are negated internally.
//
// # Safety
// `metric` and `penalty` must point to `n` readable doubles; `out` must be writable.
enum MtmStatus mtm_segment_tau(const double *metric, const double *penalty, size_t n, double *out);

// System-level pairwise accuracy; `human` is oriented higher-is-better.
//
// # Safety
// `metric` and `human` must point to `n` readable doubles; `out` must be writable.
enum MtmStatus mtm_pairwise_accuracy(const double *metric,
                                     const double *human,
                                     size_t n,
                                     double *out);

// perm-both p-value for the difference in segment-level tau of two metrics
// against the same MQM penalties.
//
// # Safety
// The three arrays must hold `n` readable doubles; `out_p` must be writable.
enum MtmStatus mtm_perm_both_segment_tau(const double *metric_a,
                                         const double *metric_b,
                                         const double *penalty,
                                         size_t n,
                                         size_t n_resamples,
                                         uint64_t seed,
                                         double *out_p);

// `100 (mt - std) / std` rounded to one decimal; `Undefined` when `std` is 0.
//
// # Safety
// `out` must be writable.
enum MtmStatus mtm_relative_change(double std, double mt, double *out);

// Smoothed sentence BLEU (0 to 100) over whitespace tokens.
//
// # Safety
// `hyp` and `reference` must be NUL-terminated UTF-8; `out` must be writable.
enum MtmStatus mtm_sentence_bleu(const char *hyp, const char *reference, double *out);

// chrF (0 to 100).
//
// # Safety
// `hyp` and `reference` must be NUL-terminated UTF-8; `out` must be writable.
enum MtmStatus mtm_chrf(const char *hyp, const char *reference, double *out);

// Loads a corpus directory holding the four TSV tables.
//
// # Safety
// `dir` must be NUL-terminated UTF-8; `out` must be writable. Release the
// handle with [`mtm_corpus_free`].
enum MtmStatus mtm_corpus_load(const char *dir, struct MtmCorpus **out);

// # Safety
// `corpus` must be null or a handle from [`mtm_corpus_load`] not yet freed.
void mtm_corpus_free(struct MtmCorpus *corpus);

// Segment, system translation, reference and rating counts.
//
// # Safety
// `corpus` must be a live handle; every out pointer must be writable.
enum MtmStatus mtm_corpus_counts(const struct MtmCorpus *corpus,
                                 size_t *segments,
                                 size_t *translations,
                                 size_t *references,
                                 size_t *ratings);

// Loads a scorer saved by `mtmeval train`.
//
// # Safety
// `path` must be NUL-terminated UTF-8; `out` must be writable. Release the
// handle with [`mtm_scorer_free`].
enum MtmStatus mtm_scorer_load(const char *path, struct MtmScorer **out);

// # Safety
// `scorer` must be null or a handle from [`mtm_scorer_load`] not yet freed.
void mtm_scorer_free(struct MtmScorer *scorer);

// Sequence score `S(y | x)`: mean base-2 log-probability per token of `y`,
// end-of-sequence included.
//
// # Safety
// `scorer` must be a live handle; `y`, `x` NUL-terminated UTF-8; `out` writable.
enum MtmStatus mtm_scorer_sequence_score(const struct MtmScorer *scorer,
                                         const char *y,
                                         const char *x,
                                         double *out);

// Prism score: `½ S(hyp | ref) + ½ S(ref | hyp)`.
//
// # Safety
// `scorer` must be a live handle; `hyp`, `reference` NUL-terminated UTF-8;
// `out` writable.
enum MtmStatus mtm_scorer_prism(const struct MtmScorer *scorer,
                                const char *hyp,
                                const char *reference,
                                double *out);

// Robustness report (JSON) for BLEU and chrF on a loaded corpus, plus the
// Prism score of `scorer` when it is not null.
//
// # Safety
// `corpus` must be a live handle, `scorer` null or a live handle and
// `out_json` writable. Free the returned string with [`mtm_string_free`].
enum MtmStatus mtm_robustness_report_json(const struct MtmCorpus *corpus,
                                          const struct MtmScorer *scorer,
                                          uint64_t seed,
                                          size_t n_resamples,
                                          char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MTMEVAL_H */
