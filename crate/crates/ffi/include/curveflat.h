#ifndef CURVEFLAT_H
#define CURVEFLAT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum CfStatus {
  CF_STATUS_OK = 0,
  CF_STATUS_NULL_POINTER = 1,
  CF_STATUS_INVALID_UTF8 = 2,
  CF_STATUS_PARSE = 3,
  CF_STATUS_VALIDATION = 4,
  CF_STATUS_INVALID_ARGUMENT = 5,
  CF_STATUS_DOMAIN = 6,
  CF_STATUS_NUMERICAL = 7,
  CF_STATUS_PANIC = 99,
} CfStatus;

/**
 * Fitted bounded logistic curve.
 */
typedef struct CfLogisticModel CfLogisticModel;

/**
 * Parsed daily observation series.
 */
typedef struct CfSeries CfSeries;

/**
 * Fitted regression spline.
 */
typedef struct CfSplineModel CfSplineModel;

/**
 * Summary statistics of a fitted spline. Undefined quantities are NaN.
 */
typedef struct CfSplineStats {
  size_t basis_size;
  double r_squared;
  double rss;
  double sigma2;
  double loocv;
  double hat_trace;
} CfSplineStats;

typedef struct CfUpperBound {
  double u_pb1;
  double u_pb2;
  double u_pb;
  bool override_used;
} CfUpperBound;

typedef struct CfLogisticParams {
  double upper_bound;
  double b0;
  double b1;
  double r_squared;
  double f_stat;
  size_t df1;
  size_t df2;
} CfLogisticParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. The pointer is
 * valid until the next curveflat call on the same thread.
 */
const char *cf_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *cf_version(void);

/**
 * Parses CSV text (NUL-terminated UTF-8) into a new series handle.
 *
 * # Safety
 * `csv_text` must be a valid C string; `out` must be valid for a write.
 */
enum CfStatus cf_series_parse_csv(const char *csv_text, struct CfSeries **out);

/**
 * Builds a series from cumulative counts starting at `first_day`.
 *
 * # Safety
 * `cumulative` must point to `len` values; `out` must be valid for a write.
 */
enum CfStatus cf_series_from_cumulative(int64_t first_day,
                                        const uint64_t *cumulative,
                                        size_t len,
                                        struct CfSeries **out);

/**
 * Number of days in the series (0 for a null handle).
 *
 * # Safety
 * `series` must be null or a live handle.
 */
size_t cf_series_len(const struct CfSeries *series);

/**
 * # Safety
 * `series` must be null or a handle not yet freed.
 */
void cf_series_free(struct CfSeries *series);

/**
 * Mean of the cumulative-ratio change rates over `n` days from `window_start`.
 *
 * # Safety
 * `series` must be a live handle; `out` must be valid for a write.
 */
enum CfStatus cf_mean_change_rate(const struct CfSeries *series,
                                  int64_t window_start,
                                  size_t n,
                                  double *out);

/**
 * Least-squares regression spline of the given degree and interior knots.
 *
 * # Safety
 * `x` and `y` must point to `len` values, `knots` to `knot_count` values;
 * `out` must be valid for a write.
 */
enum CfStatus cf_spline_fit(const double *x,
                            const double *y,
                            size_t len,
                            const double *knots,
                            size_t knot_count,
                            size_t degree,
                            struct CfSplineModel **out);

/**
 * # Safety
 * `model` must be a live handle; `out` must be valid for a write.
 */
enum CfStatus cf_spline_stats(const struct CfSplineModel *model, struct CfSplineStats *out);

/**
 * Evaluates the spline at `len` abscissae into `out`.
 *
 * # Safety
 * `x` must point to `len` values and `out` to `len` writable values.
 */
enum CfStatus cf_spline_predict(const struct CfSplineModel *model,
                                const double *x,
                                size_t len,
                                double *out);

/**
 * Copies the raw-basis coefficients into `out`, which holds `capacity`
 * values. `written` receives the coefficient count; a short buffer fails
 * with `CF_STATUS_INVALID_ARGUMENT` after reporting the required size.
 *
 * # Safety
 * `out` must point to `capacity` writable values; `written` must be valid.
 */
enum CfStatus cf_spline_coefficients(const struct CfSplineModel *model,
                                     double *out,
                                     size_t capacity,
                                     size_t *written);

/**
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void cf_spline_free(struct CfSplineModel *model);

/**
 * Geometric-increment forecast: `horizon` cumulative values into `out`.
 *
 * # Safety
 * `out` must point to `horizon` writable values.
 */
enum CfStatus cf_forecast_geometric(double start,
                                    double last_increment,
                                    double daily_factor,
                                    size_t horizon,
                                    double *out);

/**
 * Saturation bound; pass a null `u_pb2_override` to derive it from `m_bar`.
 *
 * # Safety
 * `u_pb2_override` must be null or readable; `out` must be valid for a write.
 */
enum CfStatus cf_upper_bound(double u_pb1,
                             double m_bar,
                             const double *u_pb2_override,
                             struct CfUpperBound *out);

/**
 * Fits `y = u / (1 + u b0 b1^t)` to `len` points `(t[i], y[i])`.
 *
 * # Safety
 * `t` and `y` must point to `len` values; `out` must be valid for a write.
 */
enum CfStatus cf_logistic_fit(const double *t,
                              const double *y,
                              size_t len,
                              double upper_bound,
                              int64_t window_start,
                              struct CfLogisticModel **out);

/**
 * # Safety
 * `model` must be a live handle; `out` must be valid for a write.
 */
enum CfStatus cf_logistic_params(const struct CfLogisticModel *model, struct CfLogisticParams *out);

/**
 * Curve value at time index `t`; NaN for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
double cf_logistic_predict(const struct CfLogisticModel *model, double t);

/**
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void cf_logistic_free(struct CfLogisticModel *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CURVEFLAT_H */
