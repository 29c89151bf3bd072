#ifndef FASTMMD_H
#define FASTMMD_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FastmmdStatus {
  FASTMMD_STATUS_OK = 0,
  FASTMMD_STATUS_NULL_POINTER = 1,
  FASTMMD_STATUS_INVALID_ARGUMENT = 2,
  FASTMMD_STATUS_NUMERICAL = 3,
  FASTMMD_STATUS_IO = 4,
  FASTMMD_STATUS_PANIC = 5,
} FastmmdStatus;

/**
 * Values of [`FastmmdOptions::method`].
 */
typedef enum FastmmdMethod {
  FASTMMD_METHOD_EXACT = 0,
  FASTMMD_METHOD_LINEAR = 1,
  FASTMMD_METHOD_BTEST = 2,
  FASTMMD_METHOD_FOURIER = 3,
  FASTMMD_METHOD_FASTFOOD = 4,
  FASTMMD_METHOD_CIRCULAR = 5,
} FastmmdMethod;

/**
 * Values of [`FastmmdOptions::estimate`].
 */
typedef enum FastmmdEstimateKind {
  FASTMMD_ESTIMATE_KIND_BIASED = 0,
  FASTMMD_ESTIMATE_KIND_UNBIASED = 1,
} FastmmdEstimateKind;

/**
 * Values of [`FastmmdOptions::kernel`].
 */
typedef enum FastmmdKernel {
  FASTMMD_KERNEL_GAUSSIAN = 0,
  FASTMMD_KERNEL_LAPLACIAN = 1,
} FastmmdKernel;

/**
 * Opaque handle to an immutable labeled sample set.
 */
typedef struct FastmmdSampleSet FastmmdSampleSet;

/**
 * Estimator configuration. Start from [`fastmmd_options_default`].
 * Enumerated fields hold the integer values of the matching enums.
 */
typedef struct FastmmdOptions {
  uint32_t method;
  uint32_t estimate;
  uint32_t kernel;
  double sigma;
  double k0;
  /**
   * Number of frequencies `L` for the fourier, fastfood and circular methods.
   */
  size_t basis;
  /**
   * B-test block size; 0 selects round(sqrt(n)).
   */
  size_t block_size;
  uint64_t seed;
} FastmmdOptions;

typedef struct FastmmdTestResult {
  double statistic;
  double threshold;
  double p_value;
  /**
   * 1 when equality of the distributions is rejected.
   */
  uint8_t reject;
} FastmmdTestResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Defaults: unbiased FastMMD-Fourier, Gaussian kernel with sigma 1 and
 * `K(0) = 1`, `L = 1024`, seed 0.
 */
struct FastmmdOptions fastmmd_options_default(void);

/**
 * Builds a sample set from `n` row-major rows of dimension `d` and `n`
 * labels, each 1 or 2. The data are copied.
 *
 * # Safety
 * `data` must point to `n * d` doubles and `labels` to `n` bytes; `out` must be writable.
 */
enum FastmmdStatus fastmmd_sample_set_new(const double *data,
                                          size_t n,
                                          size_t d,
                                          const uint8_t *labels,
                                          struct FastmmdSampleSet **out);

/**
 * Loads a CSV with a header row. `label_column` is a column name or a
 * 0-based index; null means `"label"`.
 *
 * # Safety
 * `path` and a non-null `label_column` must be NUL-terminated strings; `out` must be writable.
 */
enum FastmmdStatus fastmmd_sample_set_load_csv(const char *path,
                                               const char *label_column,
                                               struct FastmmdSampleSet **out);

/**
 * Releases a handle; null is ignored.
 *
 * # Safety
 * `set` must come from this library and not be used afterwards.
 */
void fastmmd_sample_set_free(struct FastmmdSampleSet *set);

/**
 * Class sizes and dimension of a sample set.
 *
 * # Safety
 * `set` must be a live handle; output pointers must be writable.
 */
enum FastmmdStatus fastmmd_sample_set_dims(const struct FastmmdSampleSet *set,
                                           size_t *n1,
                                           size_t *n2,
                                           size_t *d);

/**
 * Squared MMD of the two classes.
 *
 * # Safety
 * `set` must be a live handle, `options` readable and `value_sq` writable.
 */
enum FastmmdStatus fastmmd_estimate(const struct FastmmdSampleSet *set,
                                    const struct FastmmdOptions *options,
                                    double *value_sq);

/**
 * Permutation two-sample test at level `alpha` with `shuffles` relabelings.
 *
 * # Safety
 * `set` must be a live handle, `options` readable and `out` writable.
 */
enum FastmmdStatus fastmmd_two_sample_test(const struct FastmmdSampleSet *set,
                                           const struct FastmmdOptions *options,
                                           double alpha,
                                           size_t shuffles,
                                           struct FastmmdTestResult *out);

/**
 * In-place unnormalized Walsh-Hadamard transform; `len` must be a power of two.
 *
 * # Safety
 * `data` must point to `len` writable doubles.
 */
enum FastmmdStatus fastmmd_fwht(double *data, size_t len);

/**
 * Message of the last failed call on this thread, or null after a success.
 * The pointer stays valid until the next call into the library on this thread.
 */
const char *fastmmd_last_error_message(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FASTMMD_H */
