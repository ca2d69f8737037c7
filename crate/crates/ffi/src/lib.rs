//! C ABI for curveflat.
//!
//! Every fallible function returns a [`CfStatus`]; on anything other than
//! `CF_STATUS_OK` the message is available from [`cf_last_error_message`]
//! on the same thread. Objects cross the boundary as opaque handles that the
//! caller releases with the matching `*_free` function. Arrays are passed as
//! pointer plus length; output arrays are allocated by the caller.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use curveflat::forecast::{forecast_geometric, upper_bound, Anchor, GeometricParams};
use curveflat::logistic::{fit_logistic_growth, LogisticModel};
use curveflat::network::KnotPartition;
use curveflat::rates::{change_rates, mean_change_rate, RateBasis};
use curveflat::series::{parse_csv, ObservationSeries};
use curveflat::spline::{build_basis, fit_ols, predict, SplineModel};
use curveflat::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Validation = 4,
    InvalidArgument = 5,
    Domain = 6,
    Numerical = 7,
    Panic = 99,
}

impl From<&Error> for CfStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::MalformedRow { .. } | Error::MissingColumn(_) => CfStatus::Parse,
            Error::NonMonotoneDay { .. }
            | Error::NegativeCount { .. }
            | Error::NotMonotone { .. }
            | Error::NegativeIncrement { .. } => CfStatus::Validation,
            Error::Underdetermined { .. }
            | Error::RankDeficient { .. }
            | Error::InterpolatingPoint { .. }
            | Error::Degenerate(_) => CfStatus::Numerical,
            Error::Domain(_) => CfStatus::Domain,
            _ => CfStatus::InvalidArgument,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

fn guard<F: FnOnce() -> Result<(), (CfStatus, String)>>(f: F) -> CfStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CfStatus::Ok,
        Ok(Err((status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            CfStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (CfStatus, String) {
    (CfStatus::from(&e), e.to_string())
}

fn null(name: &str) -> (CfStatus, String) {
    (CfStatus::NullPointer, format!("{name} is null"))
}

/// # Safety
/// `p` must be null or point to `len` readable values.
unsafe fn slice<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], (CfStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// # Safety
/// `p` must be null or point to `len` writable values.
unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, name: &str) -> Result<&'a mut [T], (CfStatus, String)> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

/// # Safety
/// `out` must be null or valid for a write.
unsafe fn write_out<T>(out: *mut T, value: T, name: &str) -> Result<(), (CfStatus, String)> {
    if out.is_null() {
        return Err(null(name));
    }
    out.write(value);
    Ok(())
}

/// Message for the last failed call on this thread, or null. The pointer is
/// valid until the next curveflat call on the same thread.
#[no_mangle]
pub extern "C" fn cf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parsed daily observation series.
pub struct CfSeries(ObservationSeries);

/// Fitted regression spline.
pub struct CfSplineModel(SplineModel);

/// Fitted bounded logistic curve.
pub struct CfLogisticModel(LogisticModel);

/// Parses CSV text (NUL-terminated UTF-8) into a new series handle.
///
/// # Safety
/// `csv_text` must be a valid C string; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn cf_series_parse_csv(csv_text: *const c_char, out: *mut *mut CfSeries) -> CfStatus {
    guard(|| {
        if csv_text.is_null() {
            return Err(null("csv_text"));
        }
        let text = CStr::from_ptr(csv_text)
            .to_str()
            .map_err(|e| (CfStatus::InvalidUtf8, e.to_string()))?;
        let (series, _) = parse_csv(text, None).map_err(lib_err)?;
        write_out(out, Box::into_raw(Box::new(CfSeries(series))), "out")
    })
}

/// Builds a series from cumulative counts starting at `first_day`.
///
/// # Safety
/// `cumulative` must point to `len` values; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn cf_series_from_cumulative(
    first_day: i64,
    cumulative: *const u64,
    len: usize,
    out: *mut *mut CfSeries,
) -> CfStatus {
    guard(|| {
        let values = slice(cumulative, len, "cumulative")?;
        let series = ObservationSeries::from_cumulative(first_day, values, "ffi");
        write_out(out, Box::into_raw(Box::new(CfSeries(series))), "out")
    })
}

/// Number of days in the series (0 for a null handle).
///
/// # Safety
/// `series` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cf_series_len(series: *const CfSeries) -> usize {
    series.as_ref().map_or(0, |s| s.0.len())
}

/// # Safety
/// `series` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cf_series_free(series: *mut CfSeries) {
    if !series.is_null() {
        drop(Box::from_raw(series));
    }
}

/// Mean of the cumulative-ratio change rates over `n` days from `window_start`.
///
/// # Safety
/// `series` must be a live handle; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn cf_mean_change_rate(
    series: *const CfSeries,
    window_start: i64,
    n: usize,
    out: *mut f64,
) -> CfStatus {
    guard(|| {
        let s = series.as_ref().ok_or_else(|| null("series"))?;
        let rates = change_rates(&s.0, RateBasis::CumulativeRatio).map_err(lib_err)?;
        let mean = mean_change_rate(&rates, window_start, n).map_err(lib_err)?;
        write_out(out, mean.value, "out")
    })
}

/// Least-squares regression spline of the given degree and interior knots.
///
/// # Safety
/// `x` and `y` must point to `len` values, `knots` to `knot_count` values;
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn cf_spline_fit(
    x: *const f64,
    y: *const f64,
    len: usize,
    knots: *const f64,
    knot_count: usize,
    degree: usize,
    out: *mut *mut CfSplineModel,
) -> CfStatus {
    guard(|| {
        let x = slice(x, len, "x")?;
        let y = slice(y, len, "y")?;
        let knots = KnotPartition::user(slice(knots, knot_count, "knots")?.to_vec()).map_err(lib_err)?;
        let design = build_basis(x, &knots, degree).map_err(lib_err)?;
        let model = fit_ols(&design, y).map_err(lib_err)?;
        write_out(out, Box::into_raw(Box::new(CfSplineModel(model))), "out")
    })
}

/// Summary statistics of a fitted spline. Undefined quantities are NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CfSplineStats {
    pub basis_size: usize,
    pub r_squared: f64,
    pub rss: f64,
    pub sigma2: f64,
    pub loocv: f64,
    pub hat_trace: f64,
}

/// # Safety
/// `model` must be a live handle; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn cf_spline_stats(model: *const CfSplineModel, out: *mut CfSplineStats) -> CfStatus {
    guard(|| {
        let m = &model.as_ref().ok_or_else(|| null("model"))?.0;
        let stats = CfSplineStats {
            basis_size: m.basis.basis_size(),
            r_squared: m.r_squared,
            rss: m.rss,
            sigma2: m.residual_variance.unwrap_or(f64::NAN),
            loocv: m.loocv.unwrap_or(f64::NAN),
            hat_trace: m.hat_trace(),
        };
        write_out(out, stats, "out")
    })
}

/// Evaluates the spline at `len` abscissae into `out`.
///
/// # Safety
/// `x` must point to `len` values and `out` to `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn cf_spline_predict(
    model: *const CfSplineModel,
    x: *const f64,
    len: usize,
    out: *mut f64,
) -> CfStatus {
    guard(|| {
        let m = &model.as_ref().ok_or_else(|| null("model"))?.0;
        let x = slice(x, len, "x")?;
        let dst = slice_mut(out, len, "out")?;
        dst.copy_from_slice(&predict(m, x).values);
        Ok(())
    })
}

/// Copies the raw-basis coefficients into `out`, which holds `capacity`
/// values. `written` receives the coefficient count; a short buffer fails
/// with `CF_STATUS_INVALID_ARGUMENT` after reporting the required size.
///
/// # Safety
/// `out` must point to `capacity` writable values; `written` must be valid.
#[no_mangle]
pub unsafe extern "C" fn cf_spline_coefficients(
    model: *const CfSplineModel,
    out: *mut f64,
    capacity: usize,
    written: *mut usize,
) -> CfStatus {
    guard(|| {
        let m = &model.as_ref().ok_or_else(|| null("model"))?.0;
        let n = m.coefficients.len();
        write_out(written, n, "written")?;
        if capacity < n {
            return Err((CfStatus::InvalidArgument, format!("buffer holds {capacity}, need {n}")));
        }
        slice_mut(out, n, "out")?.copy_from_slice(&m.coefficients);
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cf_spline_free(model: *mut CfSplineModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Geometric-increment forecast: `horizon` cumulative values into `out`.
///
/// # Safety
/// `out` must point to `horizon` writable values.
#[no_mangle]
pub unsafe extern "C" fn cf_forecast_geometric(
    start: f64,
    last_increment: f64,
    daily_factor: f64,
    horizon: usize,
    out: *mut f64,
) -> CfStatus {
    guard(|| {
        let params = GeometricParams {
            start,
            last_increment,
            daily_factor,
        };
        let table = forecast_geometric(params, horizon, Anchor::new(0, None)).map_err(lib_err)?;
        slice_mut(out, horizon, "out")?.copy_from_slice(&table.values());
        Ok(())
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CfUpperBound {
    pub u_pb1: f64,
    pub u_pb2: f64,
    pub u_pb: f64,
    pub override_used: bool,
}

/// Saturation bound; pass a null `u_pb2_override` to derive it from `m_bar`.
///
/// # Safety
/// `u_pb2_override` must be null or readable; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn cf_upper_bound(
    u_pb1: f64,
    m_bar: f64,
    u_pb2_override: *const f64,
    out: *mut CfUpperBound,
) -> CfStatus {
    guard(|| {
        let e = upper_bound(u_pb1, m_bar, u_pb2_override.as_ref().copied()).map_err(lib_err)?;
        let value = CfUpperBound {
            u_pb1: e.u_pb1,
            u_pb2: e.u_pb2,
            u_pb: e.u_pb,
            override_used: e.override_used,
        };
        write_out(out, value, "out")
    })
}

/// Fits `y = u / (1 + u b0 b1^t)` to `len` points `(t[i], y[i])`.
///
/// # Safety
/// `t` and `y` must point to `len` values; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn cf_logistic_fit(
    t: *const f64,
    y: *const f64,
    len: usize,
    upper_bound: f64,
    window_start: i64,
    out: *mut *mut CfLogisticModel,
) -> CfStatus {
    guard(|| {
        let t = slice(t, len, "t")?;
        let y = slice(y, len, "y")?;
        let points: Vec<(f64, f64)> = t.iter().copied().zip(y.iter().copied()).collect();
        let model = fit_logistic_growth(&points, upper_bound, window_start).map_err(lib_err)?;
        write_out(out, Box::into_raw(Box::new(CfLogisticModel(model))), "out")
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CfLogisticParams {
    pub upper_bound: f64,
    pub b0: f64,
    pub b1: f64,
    pub r_squared: f64,
    pub f_stat: f64,
    pub df1: usize,
    pub df2: usize,
}

/// # Safety
/// `model` must be a live handle; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn cf_logistic_params(model: *const CfLogisticModel, out: *mut CfLogisticParams) -> CfStatus {
    guard(|| {
        let m = &model.as_ref().ok_or_else(|| null("model"))?.0;
        let p = CfLogisticParams {
            upper_bound: m.upper_bound,
            b0: m.b0,
            b1: m.b1,
            r_squared: m.r_squared,
            f_stat: m.f_stat,
            df1: m.df1,
            df2: m.df2,
        };
        write_out(out, p, "out")
    })
}

/// Curve value at time index `t`; NaN for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cf_logistic_predict(model: *const CfLogisticModel, t: f64) -> f64 {
    model.as_ref().map_or(f64::NAN, |m| m.0.predict(t))
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cf_logistic_free(model: *mut CfLogisticModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}
