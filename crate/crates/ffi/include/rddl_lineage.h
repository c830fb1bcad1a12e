#ifndef RDDL_LINEAGE_H
#define RDDL_LINEAGE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RddlStatus {
  RDDL_STATUS_OK = 0,
  RDDL_STATUS_NULL_POINTER = 1,
  RDDL_STATUS_INVALID_UTF8 = 2,
  /**
   * Rejected manifest or argument.
   */
  RDDL_STATUS_INVALID_ARGUMENT = 3,
  /**
   * A pipeline stage failed.
   */
  RDDL_STATUS_STAGE_FAILED = 4,
  RDDL_STATUS_IO = 5,
  RDDL_STATUS_PANIC = 6,
} RddlStatus;

typedef enum RddlProfile {
  RDDL_PROFILE_BASELINE = 0,
  RDDL_PROFILE_RDDL = 1,
} RddlProfile;

/**
 * Opaque run manifest.
 */
typedef struct RddlManifest RddlManifest;

/**
 * Opaque trained model.
 */
typedef struct RddlModel RddlModel;

/**
 * Opaque list of task results.
 */
typedef struct RddlResults RddlResults;

/**
 * Metrics of one task and profile.
 */
typedef struct RddlMetrics {
  enum RddlProfile profile;
  double precision;
  double recall;
  double pr_auc;
  double hits_at_10;
  uint64_t positives;
  uint64_t negatives;
} RddlMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null after a
 * successful call. Valid until the next call on this thread.
 */
const char *rddl_last_error(void);

/**
 * Library version as a static string.
 */
const char *rddl_version(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void rddl_string_free(char *s);

/**
 * Manifest from a preset name, `"desk"` or `"paper"`.
 *
 * # Safety
 * `preset` must be a NUL-terminated string; `out` must be writable.
 */
enum RddlStatus rddl_manifest_preset(const char *preset, struct RddlManifest **out);

/**
 * Manifest parsed and validated from TOML text.
 *
 * # Safety
 * `toml` must be a NUL-terminated string; `out` must be writable.
 */
enum RddlStatus rddl_manifest_from_toml(const char *toml, struct RddlManifest **out);

/**
 * The manifest as TOML, to be released with [`rddl_string_free`].
 *
 * # Safety
 * `m` must be a live manifest handle; `out` must be writable.
 */
enum RddlStatus rddl_manifest_to_toml(const struct RddlManifest *m, char **out);

/**
 * # Safety
 * `m` must be a live manifest handle.
 */
enum RddlStatus rddl_manifest_set_seed(struct RddlManifest *m, uint64_t seed);

/**
 * # Safety
 * `m` must be a live manifest handle; `dir` a NUL-terminated string.
 */
enum RddlStatus rddl_manifest_set_out(struct RddlManifest *m, const char *dir);

/**
 * Restricts the run to one task, or all tasks for `"all"`.
 *
 * # Safety
 * `m` must be a live manifest handle; `task` a NUL-terminated string.
 */
enum RddlStatus rddl_manifest_set_task(struct RddlManifest *m, const char *task);

/**
 * Restricts the run to one profile.
 *
 * # Safety
 * `m` must be a live manifest handle.
 */
enum RddlStatus rddl_manifest_set_profile(struct RddlManifest *m, enum RddlProfile profile);

/**
 * # Safety
 * `m` must be null or a manifest handle, not yet freed.
 */
void rddl_manifest_free(struct RddlManifest *m);

/**
 * Runs every stage of the manifest, skipping up-to-date ones, and returns
 * the collected results.
 *
 * # Safety
 * `m` must be a live manifest handle; `out` must be writable.
 */
enum RddlStatus rddl_run_pipeline(const struct RddlManifest *m, struct RddlResults **out);

/**
 * # Safety
 * `r` must be a live results handle.
 */
size_t rddl_results_len(const struct RddlResults *r);

/**
 * Metrics of row `i`.
 *
 * # Safety
 * `r` must be a live results handle; `out` must be writable.
 */
enum RddlStatus rddl_results_get(const struct RddlResults *r, size_t i, struct RddlMetrics *out);

/**
 * Task name of row `i`, owned by the results handle; null when out of
 * range.
 *
 * # Safety
 * `r` must be a live results handle.
 */
const char *rddl_results_task(const struct RddlResults *r, size_t i);

/**
 * # Safety
 * `r` must be null or a results handle, not yet freed.
 */
void rddl_results_free(struct RddlResults *r);

/**
 * Loads a model checkpoint written by the train stage.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum RddlStatus rddl_model_load(const char *path, struct RddlModel **out);

/**
 * Scores `num_paths` token sequences of `path_len` tokens each, stored
 * row-major in `tokens`, against `relation`.
 *
 * # Safety
 * `model` must be a live model handle, `tokens` must hold
 * `num_paths * path_len` values and `out` must be writable.
 */
enum RddlStatus rddl_model_score(const struct RddlModel *model,
                                 const uint32_t *tokens,
                                 size_t num_paths,
                                 size_t path_len,
                                 uint32_t relation,
                                 double *out);

/**
 * # Safety
 * `model` must be a live model handle.
 */
size_t rddl_model_num_paths(const struct RddlModel *model);

/**
 * # Safety
 * `model` must be null or a model handle, not yet freed.
 */
void rddl_model_free(struct RddlModel *model);

/**
 * Area under the precision-recall curve of `n` scores with 0/1 labels.
 *
 * # Safety
 * `scores` and `labels` must hold `n` values; `out` must be writable.
 */
enum RddlStatus rddl_pr_auc(const double *scores, const uint8_t *labels, size_t n, double *out);

/**
 * Fraction of positives ranked within the top `k` against all negatives,
 * ties counted against the positive.
 *
 * # Safety
 * `positives` must hold `n_pos` values and `negatives` `n_neg`; `out`
 * must be writable.
 */
enum RddlStatus rddl_hits_at_k(const double *positives,
                               size_t n_pos,
                               const double *negatives,
                               size_t n_neg,
                               size_t k,
                               double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RDDL_LINEAGE_H */
