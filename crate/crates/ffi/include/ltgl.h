#ifndef LTGL_H
#define LTGL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LtglStatus {
  LTGL_STATUS_OK = 0,
  LTGL_STATUS_NULL_POINTER = 1,
  LTGL_STATUS_INVALID_PARAMETER = 2,
  LTGL_STATUS_SHAPE_MISMATCH = 3,
  LTGL_STATUS_INVALID_DATA = 4,
  LTGL_STATUS_NOT_POSITIVE_DEFINITE = 5,
  LTGL_STATUS_NUMERICAL_FAILURE = 6,
  LTGL_STATUS_NO_FEASIBLE_CANDIDATE = 7,
  LTGL_STATUS_BUFFER_TOO_SMALL = 8,
  LTGL_STATUS_PANIC = 9,
} LtglStatus;

typedef enum LtglPenalty {
  LTGL_PENALTY_L1 = 0,
  LTGL_PENALTY_GROUP_L2 = 1,
  LTGL_PENALTY_LAPLACIAN = 2,
  LTGL_PENALTY_L_INF = 3,
} LtglPenalty;

typedef enum LtglStopping {
  LTGL_STOPPING_SQUARED = 0,
  LTGL_STOPPING_UNSQUARED = 1,
} LtglStopping;

typedef enum LtglPerturbation {
  LTGL_PERTURBATION_P2 = 0,
  LTGL_PERTURBATION_P1 = 1,
} LtglPerturbation;

/**
 * Opaque sample blocks.
 */
typedef struct LtglDataset LtglDataset;

/**
 * Opaque fitted model.
 */
typedef struct LtglEstimate LtglEstimate;

/**
 * Opaque generated ground truth.
 */
typedef struct LtglTruth LtglTruth;

/**
 * Mirrors the library hyperparameters. `tau = INFINITY` disables the
 * latent component.
 */
typedef struct LtglHyperparameters {
  double alpha;
  double tau;
  double beta;
  double eta;
  double rho;
  enum LtglPenalty psi;
  enum LtglPenalty phi;
  double eps_abs;
  double eps_rel;
  size_t max_iter;
  enum LtglStopping stopping;
} LtglHyperparameters;

typedef struct LtglGeneratorConfig {
  size_t d;
  size_t latent;
  size_t time_points;
  size_t n;
  enum LtglPerturbation kind;
  double epsilon;
  double sparsity;
  uint64_t seed;
} LtglGeneratorConfig;

typedef struct LtglScores {
  double f1;
  double accuracy;
  double mre;
  double mse;
  uint64_t tp;
  uint64_t fp;
  uint64_t tn;
  uint64_t fn_;
} LtglScores;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *ltgl_version(void);

/**
 * Message describing the last failure on this thread, or NULL. The pointer
 * stays valid until the next `ltgl_*` call on the same thread.
 */
const char *ltgl_last_error_message(void);

/**
 * Fills `out` with the library defaults.
 *
 * # Safety
 * `out` must be NULL or point to writable memory for one struct.
 */
enum LtglStatus ltgl_hyperparameters_default(struct LtglHyperparameters *out);

/**
 * Fits the model to `T` covariance matrices (`covs` holds `T·d·d` doubles).
 *
 * # Safety
 * Pointers must be NULL or valid for the stated lengths; `out` receives a
 * new handle on success.
 */
enum LtglStatus ltgl_fit_covariances(const double *covs,
                                     size_t t,
                                     size_t d,
                                     const struct LtglHyperparameters *params,
                                     struct LtglEstimate **out);

/**
 * Fits the model to raw samples. Block `i` has `rows[i]` rows of `d`
 * values; blocks are stored back to back in row-major order. With
 * `center != 0` each block is column-centered first.
 *
 * # Safety
 * Pointers must be NULL or valid for the stated lengths.
 */
enum LtglStatus ltgl_fit_samples(const double *data,
                                 const size_t *rows,
                                 size_t t,
                                 size_t d,
                                 int32_t center,
                                 const struct LtglHyperparameters *params,
                                 struct LtglEstimate **out);

/**
 * # Safety
 * `est` must be a handle from this library or NULL; the out pointers must be
 * NULL or writable.
 */
enum LtglStatus ltgl_estimate_dims(const struct LtglEstimate *est, size_t *t, size_t *d);

/**
 * Copies the `T·d·d` entries of the sparse component into `out`.
 *
 * # Safety
 * `out` must be valid for `len` doubles.
 */
enum LtglStatus ltgl_estimate_theta(const struct LtglEstimate *est, double *out, size_t len);

/**
 * Copies the `T·d·d` entries of the low-rank component into `out`.
 *
 * # Safety
 * `out` must be valid for `len` doubles.
 */
enum LtglStatus ltgl_estimate_lowrank(const struct LtglEstimate *est, double *out, size_t len);

/**
 * Iteration count, convergence flag and objective (NaN when infeasible).
 *
 * # Safety
 * Out pointers must be NULL or writable.
 */
enum LtglStatus ltgl_estimate_summary(const struct LtglEstimate *est,
                                      size_t *iterations,
                                      int32_t *converged,
                                      double *objective);

/**
 * # Safety
 * `est` must be NULL or a handle not yet freed.
 */
void ltgl_estimate_free(struct LtglEstimate *est);

/**
 * Generates ground truth and samples from it.
 *
 * # Safety
 * `cfg` must be valid; `truth` and `data` receive new handles on success.
 */
enum LtglStatus ltgl_generate(const struct LtglGeneratorConfig *cfg,
                              struct LtglTruth **truth,
                              struct LtglDataset **data);

/**
 * Default generator settings.
 *
 * # Safety
 * `out` must be NULL or writable.
 */
enum LtglStatus ltgl_generator_default(struct LtglGeneratorConfig *out);

/**
 * # Safety
 * `truth` must be a live handle; `out` valid for `len` doubles.
 */
enum LtglStatus ltgl_truth_theta(const struct LtglTruth *truth, double *out, size_t len);

/**
 * # Safety
 * `truth` must be a live handle; `out` valid for `len` doubles.
 */
enum LtglStatus ltgl_truth_lowrank(const struct LtglTruth *truth, double *out, size_t len);

/**
 * # Safety
 * `truth` must be NULL or a handle not yet freed.
 */
void ltgl_truth_free(struct LtglTruth *truth);

/**
 * Number of blocks and variables.
 *
 * # Safety
 * Pointers must be NULL or valid.
 */
enum LtglStatus ltgl_dataset_dims(const struct LtglDataset *data, size_t *t, size_t *d);

/**
 * Row count of block `index`.
 *
 * # Safety
 * Pointers must be NULL or valid.
 */
enum LtglStatus ltgl_dataset_block_rows(const struct LtglDataset *data, size_t index, size_t *rows);

/**
 * Copies block `index` in row-major order.
 *
 * # Safety
 * `out` must be valid for `len` doubles.
 */
enum LtglStatus ltgl_dataset_block(const struct LtglDataset *data,
                                   size_t index,
                                   double *out,
                                   size_t len);

/**
 * # Safety
 * `data` must be NULL or a handle not yet freed.
 */
void ltgl_dataset_free(struct LtglDataset *data);

/**
 * Scores an estimate against a reference. All four arrays hold `T·d·d`
 * row-major values.
 *
 * # Safety
 * Array pointers must be valid for `T·d·d` doubles; `out` writable.
 */
enum LtglStatus ltgl_score(const double *truth_theta,
                           const double *truth_lowrank,
                           const double *est_theta,
                           const double *est_lowrank,
                           size_t t,
                           size_t d,
                           struct LtglScores *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LTGL_H */
