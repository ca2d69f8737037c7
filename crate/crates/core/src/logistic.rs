//! Bounded logistic growth with a fixed ceiling `u`:
//!
//! ```text
//! y(t) = u / (1 + u * b0 * b1^t)
//! ```
//!
//! Fitting linearizes to `ln(1/y - 1/u) = ln(b0) + t * ln(b1)` and solves by
//! ordinary least squares; R^2 and F are reported on that linearized scale.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Logistic function, stable for large `|z|`.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `beta[0] + beta[1] * x[0] + ... + beta[k] * x[k-1]`.
pub fn linear_predictor(beta: &[f64], x: &[f64]) -> Result<f64> {
    if beta.len() != x.len() + 1 {
        return Err(Error::LengthMismatch(format!(
            "{} coefficients for {} covariates",
            beta.len(),
            x.len()
        )));
    }
    Ok(beta[0] + beta[1..].iter().zip(x).map(|(b, v)| b * v).sum::<f64>())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub upper_bound: f64,
    /// The "constant".
    pub b0: f64,
    pub b1: f64,
    /// First day of the fitted window and its length.
    pub window_start: i64,
    pub n: usize,
    pub r_squared: f64,
    pub f_stat: f64,
    pub df1: usize,
    pub df2: usize,
    /// Standard errors of `ln(b0)` and `ln(b1)` on the linearized scale.
    pub ln_b0_se: f64,
    pub ln_b1_se: f64,
}

impl LogisticModel {
    /// Value at time index `t` (the same index the fit used).
    pub fn predict(&self, t: f64) -> f64 {
        predict_logistic(self, t)
    }

    /// Value on a day, with `t = day_id - window_start + 1`.
    pub fn predict_day(&self, day_id: i64) -> f64 {
        predict_logistic(self, (day_id - self.window_start + 1) as f64)
    }
}

pub fn predict_logistic(model: &LogisticModel, t: f64) -> f64 {
    let u = model.upper_bound;
    // u / (1 + u b0 b1^t) = u * sigmoid(-(ln(u b0) + t ln b1))
    let z = (u * model.b0).ln() + t * model.b1.ln();
    u * sigmoid(-z)
}

/// Fits `(t, y)` observations with ceiling `u`. `window_start` is recorded in
/// the model for day-based prediction.
pub fn fit_logistic_growth(points: &[(f64, f64)], u: f64, window_start: i64) -> Result<LogisticModel> {
    let n = points.len();
    if n < 3 {
        return Err(Error::TooShort { needed: 3, got: n });
    }
    if !(u > 0.0) || !u.is_finite() {
        return Err(Error::InvalidArgument(format!("upper bound must be > 0, got {u}")));
    }
    let mut ts = Vec::with_capacity(n);
    let mut zs = Vec::with_capacity(n);
    for &(t, y) in points {
        if !(y > 0.0) {
            return Err(Error::Domain(format!("y = {y} at t = {t} is not positive")));
        }
        if y >= u {
            return Err(Error::Domain(format!("y = {y} at t = {t} is not below the upper bound {u}")));
        }
        ts.push(t);
        zs.push((1.0 / y - 1.0 / u).ln());
    }

    let nf = n as f64;
    let t_mean = ts.iter().sum::<f64>() / nf;
    let z_mean = zs.iter().sum::<f64>() / nf;
    let sxx: f64 = ts.iter().map(|t| (t - t_mean).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Degenerate("all time indices are equal".into()));
    }
    let sxz: f64 = ts.iter().zip(&zs).map(|(t, z)| (t - t_mean) * (z - z_mean)).sum();
    let slope = sxz / sxx;
    let intercept = z_mean - slope * t_mean;

    let tss: f64 = zs.iter().map(|z| (z - z_mean).powi(2)).sum();
    let rss: f64 = ts
        .iter()
        .zip(&zs)
        .map(|(t, z)| (z - intercept - slope * t).powi(2))
        .sum();
    let r_squared = if tss > 0.0 { (1.0 - rss / tss).clamp(0.0, 1.0) } else { 0.0 };
    let (df1, df2) = (1usize, n - 2);
    let f_stat = if r_squared < 1.0 {
        r_squared / (1.0 - r_squared) * df2 as f64 / df1 as f64
    } else {
        f64::INFINITY
    };
    let s2 = rss / df2 as f64;
    let ln_b1_se = (s2 / sxx).sqrt();
    let ln_b0_se = (s2 * (1.0 / nf + t_mean * t_mean / sxx)).sqrt();

    Ok(LogisticModel {
        upper_bound: u,
        b0: intercept.exp(),
        b1: slope.exp(),
        window_start,
        n,
        r_squared,
        f_stat,
        df1,
        df2,
        ln_b0_se,
        ln_b1_se,
    })
}
