//! Horizon forecasts of cumulative cases and the saturation upper bound.
//!
//! Two generators are provided. [`forecast_eq13`] is the literal four-term
//! recursion driven by the mean change rate; it contracts geometrically for
//! any parameters near a realistic mean rate and is kept for fidelity
//! experiments. [`forecast_geometric`] grows the daily increment by a constant
//! factor and is the mode used to replay published forecast tables.

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::round_half_up;

/// Where a forecast starts: the last observed day.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Anchor {
    pub day_id: i64,
    pub date: Option<NaiveDate>,
}

impl Anchor {
    pub fn new(day_id: i64, date: Option<NaiveDate>) -> Self {
        Self { day_id, date }
    }

    fn step(&self, k: usize) -> (i64, Option<NaiveDate>) {
        (
            self.day_id + k as i64,
            self.date.and_then(|d| d.checked_add_days(Days::new(k as u64))),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForecastRow {
    pub day_id: i64,
    pub date: Option<NaiveDate>,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForecastMode {
    Eq13Recursive,
    GeometricIncrement,
}

/// Intermediates of one recursion step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForecastState {
    pub day_id: i64,
    pub f_hat: f64,
    pub u: f64,
    pub g: f64,
    pub h: f64,
    pub m_bar: f64,
    pub m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometricParams {
    /// Cumulative count on the anchor day.
    pub start: f64,
    /// Increment on the anchor day; the first forecast increment is
    /// `last_increment * factor`.
    pub last_increment: f64,
    pub daily_factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ForecastParams {
    Eq13 {
        f0: f64,
        m_bar: f64,
        m: f64,
        u0: f64,
        steps: Vec<ForecastState>,
    },
    Geometric(GeometricParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastTable {
    pub rows: Vec<ForecastRow>,
    pub mode: ForecastMode,
    pub params: ForecastParams,
}

impl ForecastTable {
    pub fn values(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.value).collect()
    }

    /// Highest forecast value.
    pub fn peak(&self) -> Option<f64> {
        self.rows.iter().map(|r| r.value).reduce(f64::max)
    }

    /// `day_id,date,forecast` with counts rounded half up.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("day_id,date,forecast\n");
        for r in &self.rows {
            let date = r.date.map(|d| d.format("%Y-%m-%d").to_string()).unwrap_or_default();
            out.push_str(&format!("{},{},{}\n", r.day_id, date, round_half_up(r.value)));
        }
        out
    }
}

fn check_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be finite, got {v}")))
    }
}

/// The four-term recursion, evaluated per step in the order U, g, h, f:
///
/// ```text
/// U_k = m_bar - U_{k-1}            (U_0 = u0)
/// g_k = f_{k-1} * U_k * m_bar      (f_0 = last_observed)
/// h_k = g_k * m + g_k * U_k * m_bar
/// f_k = h_k - g_k
/// ```
pub fn forecast_eq13(
    last_observed: f64,
    m_bar: f64,
    m: f64,
    u0: f64,
    horizon: usize,
    anchor: Anchor,
) -> Result<ForecastTable> {
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    for (name, v) in [("last_observed", last_observed), ("m_bar", m_bar), ("m", m), ("u0", u0)] {
        check_finite(name, v)?;
    }
    let mut f_prev = last_observed;
    let mut u_prev = u0;
    let mut steps = Vec::with_capacity(horizon);
    let mut rows = Vec::with_capacity(horizon);
    for k in 1..=horizon {
        let u = m_bar - u_prev;
        let g = (f_prev * u) * m_bar;
        let h = (g * m) + (g * u) * m_bar;
        let f_hat = h - g;
        let (day_id, date) = anchor.step(k);
        steps.push(ForecastState {
            day_id,
            f_hat,
            u,
            g,
            h,
            m_bar,
            m,
        });
        rows.push(ForecastRow {
            day_id,
            date,
            value: f_hat,
        });
        f_prev = f_hat;
        u_prev = u;
    }
    Ok(ForecastTable {
        rows,
        mode: ForecastMode::Eq13Recursive,
        params: ForecastParams::Eq13 {
            f0: last_observed,
            m_bar,
            m,
            u0,
            steps,
        },
    })
}

/// `increment_k = last_increment * factor^k`, `cumulative_k = cumulative_{k-1} + increment_k`.
pub fn forecast_geometric(params: GeometricParams, horizon: usize, anchor: Anchor) -> Result<ForecastTable> {
    let GeometricParams {
        start,
        last_increment,
        daily_factor,
    } = params;
    if !(daily_factor > 0.0) || !daily_factor.is_finite() {
        return Err(Error::InvalidArgument(format!("daily factor must be > 0, got {daily_factor}")));
    }
    if !(last_increment >= 0.0) || !last_increment.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "last increment must be >= 0, got {last_increment}"
        )));
    }
    check_finite("start", start)?;
    let mut cumulative = start;
    let mut increment = last_increment;
    let rows = (1..=horizon)
        .map(|k| {
            increment *= daily_factor;
            cumulative += increment;
            let (day_id, date) = anchor.step(k);
            ForecastRow {
                day_id,
                date,
                value: cumulative,
            }
        })
        .collect();
    Ok(ForecastTable {
        rows,
        mode: ForecastMode::GeometricIncrement,
        params: ForecastParams::Geometric(params),
    })
}

/// Search range and resolution for [`calibrate_to_table`].
pub const FACTOR_GRID_LO: f64 = 0.8;
pub const FACTOR_GRID_HI: f64 = 1.25;
pub const FACTOR_GRID_STEP: f64 = 5e-4;
const INNER_ITERATIONS: usize = 100;
const OUTER_ITERATIONS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub params: GeometricParams,
    /// The day before the first golden row.
    pub anchor: Anchor,
    /// Max absolute deviation of the unrounded replay from the golden rows.
    pub max_abs_deviation: f64,
}

/// Geometric parameters whose replay from the day before the first row
/// minimizes the maximum absolute deviation from `rows`.
///
/// For a fixed factor the replay is linear in (start, increment): the best
/// start centres the residual range, and the best increment minimizes a
/// convex function, found by golden-section search. The factor is scanned on
/// a grid over `[FACTOR_GRID_LO, FACTOR_GRID_HI]` with step
/// `FACTOR_GRID_STEP`, then refined by golden-section search within one grid
/// step of the best grid point.
pub fn calibrate_to_table(rows: &[ForecastRow]) -> Result<Calibration> {
    if rows.len() < 3 {
        return Err(Error::TooShort {
            needed: 3,
            got: rows.len(),
        });
    }
    for (i, w) in rows.windows(2).enumerate() {
        if !(w[1].value > w[0].value) {
            return Err(Error::InvalidArgument(format!(
                "golden rows must be strictly increasing (row {} = {}, row {} = {})",
                i + 1,
                w[0].value,
                i + 2,
                w[1].value
            )));
        }
        if w[1].day_id != w[0].day_id + 1 {
            return Err(Error::InvalidArgument(format!(
                "golden rows must be on consecutive days (day {} follows day {})",
                w[1].day_id, w[0].day_id
            )));
        }
    }
    let values: Vec<f64> = rows.iter().map(|r| r.value).collect();

    let steps = ((FACTOR_GRID_HI - FACTOR_GRID_LO) / FACTOR_GRID_STEP).round() as usize;
    let (mut best_f, mut best) = (FACTOR_GRID_LO, fit_for_factor(&values, FACTOR_GRID_LO));
    for i in 1..=steps {
        let f = FACTOR_GRID_LO + i as f64 * FACTOR_GRID_STEP;
        let fit = fit_for_factor(&values, f);
        if fit.deviation < best.deviation {
            best_f = f;
            best = fit;
        }
    }
    let refined_f = golden_section(
        |f| fit_for_factor(&values, f).deviation,
        best_f - FACTOR_GRID_STEP,
        best_f + FACTOR_GRID_STEP,
        OUTER_ITERATIONS,
    );
    let refined = fit_for_factor(&values, refined_f);
    if refined.deviation <= best.deviation {
        best_f = refined_f;
        best = refined;
    }

    let first = rows[0];
    let anchor = Anchor::new(
        first.day_id - 1,
        first.date.and_then(|d| d.checked_sub_days(Days::new(1))),
    );
    Ok(Calibration {
        params: GeometricParams {
            start: best.start,
            last_increment: best.increment,
            daily_factor: best_f,
        },
        anchor,
        max_abs_deviation: best.deviation,
    })
}

struct FactorFit {
    start: f64,
    increment: f64,
    deviation: f64,
}

/// Chebyshev fit of `start + increment * S_k(f)` with `S_k = f + ... + f^k`.
fn fit_for_factor(values: &[f64], f: f64) -> FactorFit {
    let mut sums = Vec::with_capacity(values.len());
    let (mut power, mut acc) = (1.0, 0.0);
    for _ in values {
        power *= f;
        acc += power;
        sums.push(acc);
    }
    let residual_range = |inc: f64| -> (f64, f64) {
        values
            .iter()
            .zip(&sums)
            .map(|(v, s)| v - inc * s)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r), hi.max(r)))
    };
    let n = values.len() - 1;
    let slope = (values[n] - values[0]) / (sums[n] - sums[0]);
    let increment = golden_section(
        |inc| {
            let (lo, hi) = residual_range(inc);
            hi - lo
        },
        0.0,
        2.0 * slope.abs() + 1.0,
        INNER_ITERATIONS,
    );
    let (lo, hi) = residual_range(increment);
    FactorFit {
        start: (lo + hi) / 2.0,
        increment,
        deviation: (hi - lo) / 2.0,
    }
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, iterations: usize) -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iterations {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        c
    } else {
        d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpperBoundEstimate {
    pub u_pb1: f64,
    pub u_pb2: f64,
    pub u_pb: f64,
    pub override_used: bool,
}

impl UpperBoundEstimate {
    /// Integer presentation: `u_pb` is floored, the two inputs are rounded
    /// half up.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "u_pb1": round_half_up(self.u_pb1),
            "u_pb2": round_half_up(self.u_pb2),
            "u_pb": self.u_pb.floor() as i64,
            "override_used": self.override_used,
        })
    }
}

/// `u_pb2 = u_pb1 * m_bar` unless overridden; `u_pb` is their mean.
pub fn upper_bound(u_pb1: f64, m_bar: f64, u_pb2_override: Option<f64>) -> Result<UpperBoundEstimate> {
    if !(u_pb1 > 0.0) || !u_pb1.is_finite() {
        return Err(Error::InvalidArgument(format!("u_pb1 must be > 0, got {u_pb1}")));
    }
    if !(m_bar > 0.0) || !m_bar.is_finite() {
        return Err(Error::InvalidArgument(format!("m_bar must be > 0, got {m_bar}")));
    }
    let u_pb2 = u_pb2_override.unwrap_or(u_pb1 * m_bar);
    Ok(UpperBoundEstimate {
        u_pb1,
        u_pb2,
        u_pb: (u_pb1 + u_pb2) / 2.0,
        override_used: u_pb2_override.is_some(),
    })
}
