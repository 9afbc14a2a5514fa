#ifndef MLION_H
#define MLION_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MlionStatus {
  MLION_STATUS_OK = 0,
  MLION_STATUS_NULL_POINTER = 1,
  MLION_STATUS_INVALID_ARGUMENT = 2,
  MLION_STATUS_ALPHA_OUT_OF_RANGE = 3,
  MLION_STATUS_HORIZON_MISMATCH = 4,
  MLION_STATUS_NON_POSITIVE_ACTUAL = 5,
  MLION_STATUS_LENGTH_MISMATCH = 6,
  MLION_STATUS_DIMENSION_MISMATCH = 7,
  MLION_STATUS_COMPONENT_OUT_OF_RANGE = 8,
  MLION_STATUS_INSUFFICIENT_HISTORY = 9,
  MLION_STATUS_PANIC = 98,
  MLION_STATUS_INTERNAL = 99,
} MlionStatus;

/**
 * Opaque adaptive-fusion state.
 */
typedef struct MlionFusion MlionFusion;

/**
 * Opaque per-user ranking weights.
 */
typedef struct MlionPolicy MlionPolicy;

/**
 * One OHLCV bar; `t` in UTC epoch seconds.
 */
typedef struct MlionCandle {
  int64_t t;
  double o;
  double h;
  double l;
  double c;
  double v;
} MlionCandle;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until the
 * next mlion call on the same thread.
 */
const char *mlion_last_error(void);

/**
 * Static, NUL-terminated library version.
 */
const char *mlion_version(void);

/**
 * Fuses two aligned forecasts of `n` candles into `out` with weight `alpha`
 * on `llm`.
 *
 * # Safety
 * `llm`, `ml` and `out` must each point to `n` candles.
 */
enum MlionStatus mlion_fuse(const struct MlionCandle *llm,
                            const struct MlionCandle *ml,
                            size_t n,
                            double alpha,
                            struct MlionCandle *out);

/**
 * `1 - |predicted - actual| / actual`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum MlionStatus mlion_accuracy(double predicted, double actual, double *out);

/**
 * Fraction of steps whose direction matches, with `anchor` as the close
 * before the first step.
 *
 * # Safety
 * `predicted` and `actual` must point to `n` values; `out` must be valid.
 */
enum MlionStatus mlion_win_rate(const double *predicted,
                                const double *actual,
                                size_t n,
                                double anchor,
                                double *out);

/**
 * RSI over `n` closes. `out` receives `n` values; leading positions without
 * enough history are NaN.
 *
 * # Safety
 * `closes` and `out` must point to `n` values.
 */
enum MlionStatus mlion_rsi(const double *closes, size_t n, size_t period, double *out);

/**
 * MACD line, signal line and histogram over `n` closes, NaN-padded.
 *
 * # Safety
 * `closes`, `line`, `signal_line` and `histogram` must point to `n` values.
 */
enum MlionStatus mlion_macd(const double *closes,
                            size_t n,
                            size_t fast,
                            size_t slow,
                            size_t signal,
                            double *line,
                            double *signal_line,
                            double *histogram);

/**
 * Bollinger mid, upper and lower bands over `n` closes, NaN-padded.
 *
 * # Safety
 * `closes`, `mid`, `upper` and `lower` must point to `n` values.
 */
enum MlionStatus mlion_bollinger(const double *closes,
                                 size_t n,
                                 size_t period,
                                 double k,
                                 double *mid,
                                 double *upper,
                                 double *lower);

/**
 * Weighted signal score; the weights must sum to one.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum MlionStatus mlion_score_signal(double relevance,
                                    double recency,
                                    double credibility,
                                    double w_relevance,
                                    double w_recency,
                                    double w_credibility,
                                    double *out);

/**
 * `logistic(theta . phi)` for vectors of length `n`.
 *
 * # Safety
 * `theta` and `phi` must point to `n` values; `out` must be valid.
 */
enum MlionStatus mlion_score_candidate(const double *theta,
                                       const double *phi,
                                       size_t n,
                                       double *out);

/**
 * New fusion state. Writes the handle to `out`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum MlionStatus mlion_fusion_new(double alpha0,
                                  size_t window,
                                  double delta,
                                  double step_down,
                                  size_t cadence,
                                  struct MlionFusion **out);

/**
 * Feeds one pair of track accuracies into the state.
 *
 * # Safety
 * `handle` must come from [`mlion_fusion_new`] and not be freed.
 */
enum MlionStatus mlion_fusion_update(struct MlionFusion *handle,
                                     double accuracy_llm,
                                     double accuracy_ml);

/**
 * Current LLM-track weight.
 *
 * # Safety
 * `handle` must be live; `out` must be valid.
 */
enum MlionStatus mlion_fusion_alpha(const struct MlionFusion *handle, double *out);

/**
 * # Safety
 * `handle` must come from [`mlion_fusion_new`] or be null; it is invalid
 * afterwards.
 */
void mlion_fusion_free(struct MlionFusion *handle);

/**
 * New zero-initialized policy of dimension five with learning rate `eta`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum MlionStatus mlion_policy_new(double eta, struct MlionPolicy **out);

/**
 * One online update from features `phi` (length `n`) and outcome `y`.
 *
 * # Safety
 * `handle` must be live; `phi` must point to `n` values.
 */
enum MlionStatus mlion_policy_update(struct MlionPolicy *handle,
                                     const double *phi,
                                     size_t n,
                                     double y);

/**
 * Score of features `phi` under the handle's weights.
 *
 * # Safety
 * `handle` must be live; `phi` must point to `n` values; `out` valid.
 */
enum MlionStatus mlion_policy_score(const struct MlionPolicy *handle,
                                    const double *phi,
                                    size_t n,
                                    double *out);

/**
 * Copies the weights into `out`, which must hold `n` values; `n` must equal
 * the policy dimension.
 *
 * # Safety
 * `handle` must be live; `out` must point to `n` values.
 */
enum MlionStatus mlion_policy_theta(const struct MlionPolicy *handle, double *out, size_t n);

/**
 * # Safety
 * `handle` must come from [`mlion_policy_new`] or be null.
 */
void mlion_policy_free(struct MlionPolicy *handle);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MLION_H */
