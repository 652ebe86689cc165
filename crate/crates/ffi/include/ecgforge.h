/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef ECGFORGE_H
#define ECGFORGE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum EcgStatus {
  ECG_STATUS_OK = 0,
  ECG_STATUS_NULL_POINTER = 1,
  ECG_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Caller-provided buffer too small; the required size was still written.
   */
  ECG_STATUS_BUFFER_TOO_SMALL = 3,
  ECG_STATUS_IO = 4,
  ECG_STATUS_FORMAT = 5,
  ECG_STATUS_MISSING_MODEL = 6,
  /**
   * A correlation was undefined (zero variance).
   */
  ECG_STATUS_UNDEFINED = 7,
  ECG_STATUS_INTERNAL = 99,
} EcgStatus;

/**
 * Point metric for [`ecg_frechet_distance`].
 */
typedef enum EcgPointMetric {
  ECG_POINT_METRIC_AMPLITUDE = 0,
  ECG_POINT_METRIC_TIME_AMPLITUDE = 1,
} EcgPointMetric;

/**
 * Opaque set of trained generators loaded from a `train` output directory.
 */
typedef struct EcgGenerator EcgGenerator;

/**
 * Opaque single-lead signal.
 */
typedef struct EcgSignal EcgSignal;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *ecg_version(void);

/**
 * Message of the last failure on this thread, or an empty string. Valid
 * until the next call into the library on the same thread.
 */
const char *ecg_last_error(void);

/**
 * Static name of lead `index` ("I" .. "V6"), or null when out of range.
 */
const char *ecg_lead_name(uint32_t index);

/**
 * Discrete Fréchet distance between two sequences.
 *
 * # Safety
 * `s` and `q` must point to `ns` and `nq` readable doubles.
 */
enum EcgStatus ecg_frechet_distance(const double *s,
                                    size_t ns,
                                    const double *q,
                                    size_t nq,
                                    enum EcgPointMetric metric,
                                    double *result);

/**
 * Inner product of `q` and `s`. Unequal lengths are an error unless
 * `zero_pad` is true, in which case the shorter input is zero-padded.
 *
 * # Safety
 * `q` and `s` must point to `nq` and `ns` readable doubles.
 */
enum EcgStatus ecg_cross_correlation(const double *q,
                                     size_t nq,
                                     const double *s,
                                     size_t ns,
                                     bool zero_pad,
                                     double *result);

/**
 * Auto-correlation of `q` at a non-negative `shift`.
 *
 * # Safety
 * `q` must point to `n` readable doubles.
 */
enum EcgStatus ecg_auto_correlation(const double *q, size_t n, size_t shift, double *result);

/**
 * Pearson correlation of two equal-length sequences. Returns
 * [`EcgStatus::Undefined`] when either has zero variance.
 *
 * # Safety
 * `a` and `b` must point to `n` readable doubles.
 */
enum EcgStatus ecg_pearson(const double *a, const double *b, size_t n, double *result);

/**
 * Min-max normalises `n` samples in place onto `[0, 1]`.
 *
 * # Safety
 * `x` must point to `n` writable doubles.
 */
enum EcgStatus ecg_normalize(double *x, size_t n);

/**
 * Creates a signal from `n` samples.
 *
 * # Safety
 * `samples` must point to `n` readable doubles; `handle` must be writable.
 */
enum EcgStatus ecg_signal_new(uint32_t lead_index,
                              double sampling_rate_hz,
                              const double *samples,
                              size_t n,
                              struct EcgSignal **handle);

/**
 * Reads a binary signal file.
 *
 * # Safety
 * `file` must be a NUL-terminated UTF-8 path; `handle` must be writable.
 */
enum EcgStatus ecg_signal_read(const char *file, struct EcgSignal **handle);

/**
 * Releases a signal. Null is ignored.
 *
 * # Safety
 * `handle` must come from this library and not be used afterwards.
 */
void ecg_signal_free(struct EcgSignal *handle);

/**
 * Number of samples, or 0 for a null handle.
 *
 * # Safety
 * `handle` must be null or valid.
 */
size_t ecg_signal_len(const struct EcgSignal *handle);

/**
 * Copies the samples into `buf`.
 *
 * # Safety
 * `handle` must be valid; `buf` must hold `cap` doubles.
 */
enum EcgStatus ecg_signal_samples(const struct EcgSignal *handle,
                                  double *buf,
                                  size_t cap,
                                  size_t *len_out);

/**
 * Wavelet-denoises a signal into a new handle. `wavelet_order` is 2, 4 or 8
 * (0 selects the default); `levels` 0 selects the default.
 *
 * # Safety
 * `handle` must be valid; `result` must be writable.
 */
enum EcgStatus ecg_signal_denoise(const struct EcgSignal *handle,
                                  uint32_t wavelet_order,
                                  uint32_t levels,
                                  struct EcgSignal **result);

/**
 * Detects R peaks with default settings and writes their sample indices.
 *
 * # Safety
 * `handle` must be valid; `buf` must hold `cap` values.
 */
enum EcgStatus ecg_signal_r_peaks(const struct EcgSignal *handle,
                                  size_t *buf,
                                  size_t cap,
                                  size_t *len_out);

/**
 * Loads the epoch-selected generators from a `train` output directory.
 *
 * # Safety
 * `dir` must be a NUL-terminated UTF-8 path; `handle` must be writable.
 */
enum EcgStatus ecg_generator_load(const char *dir, struct EcgGenerator **handle);

/**
 * Releases a generator set. Null is ignored.
 *
 * # Safety
 * `handle` must come from this library and not be used afterwards.
 */
void ecg_generator_free(struct EcgGenerator *handle);

/**
 * Beat length the generators were trained on, or 0 for a null handle.
 *
 * # Safety
 * `handle` must be null or valid.
 */
size_t ecg_generator_beat_len(const struct EcgGenerator *handle);

/**
 * Generates the `target_lead` beat from one normalised source beat of at
 * most `ecg_generator_beat_len` samples in `[0, 1]`. The output always has
 * `ecg_generator_beat_len` samples.
 *
 * # Safety
 * `handle` must be valid; `beat` must hold `n` doubles; `buf` must hold
 * `cap` doubles.
 */
enum EcgStatus ecg_generator_generate(struct EcgGenerator *handle,
                                      uint32_t source_lead,
                                      uint32_t target_lead,
                                      const double *beat,
                                      size_t n,
                                      double *buf,
                                      size_t cap,
                                      size_t *len_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ECGFORGE_H */
