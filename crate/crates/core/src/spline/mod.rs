//! Regression splines on the truncated power basis.
//!
//! For polynomial order `M = degree + 1` and interior knots `xi_1 < ... < xi_K'`
//! the basis is
//!
//! ```text
//! 1, x, ..., x^(M-1), (x - xi_1)_+^(M-1), ..., (x - xi_K')_+^(M-1)
//! ```
//!
//! so with `K = K' + 1` intervals it has `J = M + K - 1` columns. Fits are
//! ordinary least squares. The design is solved on abscissae rescaled to
//! `[0, 1]` through an SVD, and coefficients are mapped back to the raw basis
//! afterwards; the raw truncated power basis is too ill-conditioned on day
//! indices to be solved directly.

mod bias_variance;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::KnotPartition;

pub use bias_variance::{bias_variance_mc, BiasVarianceReport, FitterConfig, TruthModel};

/// Singular values below this fraction of the largest one count as zero.
pub const RANK_TOL: f64 = 1e-10;

/// Hat diagonals within this distance of 1 are treated as interpolated.
const LEVERAGE_ONE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplineBasis {
    /// Polynomial degree `M - 1`.
    pub degree: usize,
    pub knots: KnotPartition,
}

impl SplineBasis {
    /// Polynomial order `M`.
    pub fn order(&self) -> usize {
        self.degree + 1
    }

    /// Number of intervals `K`.
    pub fn intervals(&self) -> usize {
        self.knots.len() + 1
    }

    /// `J = M + K - 1`.
    pub fn basis_size(&self) -> usize {
        self.order() + self.intervals() - 1
    }

    /// Raw basis row at `x`.
    pub fn row(&self, x: f64) -> Vec<f64> {
        basis_row(x, &self.knots.interior_knots, self.degree)
    }
}

fn truncated_power(x: f64, knot: f64, degree: usize) -> f64 {
    if x <= knot {
        0.0
    } else {
        (x - knot).powi(degree as i32)
    }
}

fn basis_row(x: f64, knots: &[f64], degree: usize) -> Vec<f64> {
    let mut row = Vec::with_capacity(degree + 1 + knots.len());
    let mut p = 1.0;
    for _ in 0..=degree {
        row.push(p);
        p *= x;
    }
    row.extend(knots.iter().map(|&k| truncated_power(x, k, degree)));
    row
}

/// `n x J` evaluations of the raw basis at the abscissae.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub basis: SplineBasis,
    pub x: Vec<f64>,
    pub matrix: DMatrix<f64>,
}

impl DesignMatrix {
    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }
}

pub fn build_basis(x: &[f64], knots: &KnotPartition, degree: usize) -> Result<DesignMatrix> {
    if x.is_empty() {
        return Err(Error::TooShort { needed: 1, got: 0 });
    }
    if let Some(v) = x.iter().find(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("abscissa {v} is not finite")));
    }
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for w in knots.interior_knots.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::KnotOrder { prev: w[0], next: w[1] });
        }
    }
    for &k in &knots.interior_knots {
        if !(k > lo && k < hi) {
            return Err(Error::KnotOutOfRange { knot: k, lo, hi });
        }
    }
    let basis = SplineBasis {
        degree,
        knots: knots.clone(),
    };
    let j = basis.basis_size();
    let matrix = DMatrix::from_fn(x.len(), j, |i, c| basis.row(x[i])[c]);
    Ok(DesignMatrix {
        basis,
        x: x.to_vec(),
        matrix,
    })
}

/// Affine map of the abscissae onto `[0, 1]` used for the internal solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct Scaling {
    offset: f64,
    span: f64,
}

impl Scaling {
    fn apply(&self, x: f64) -> f64 {
        (x - self.offset) / self.span
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplineModel {
    pub basis: SplineBasis,
    /// Coefficients on the raw basis, length `J`.
    pub coefficients: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub fitted: Vec<f64>,
    /// `RSS / (n - J)`; `None` when `n == J`.
    pub residual_variance: Option<f64>,
    pub hat_diagonal: Vec<f64>,
    /// Closed-form leave-one-out score; `None` when some point has leverage 1.
    pub loocv: Option<f64>,
    pub r_squared: f64,
    pub rss: f64,
    scaling: Scaling,
    scaled_knots: Vec<f64>,
    scaled_coefficients: Vec<f64>,
    /// Thin left singular vectors of the scaled design (`n x J`).
    left: DMatrix<f64>,
    /// `Sigma^-1 V^T` of the scaled design (`J x J`).
    precision_factor: DMatrix<f64>,
}

impl SplineModel {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn residuals(&self) -> Vec<f64> {
        self.y.iter().zip(&self.fitted).map(|(y, f)| y - f).collect()
    }

    pub fn hat_trace(&self) -> f64 {
        self.hat_diagonal.iter().sum()
    }

    /// The full hat matrix `L = X (X^T X)^-1 X^T`.
    pub fn hat_matrix(&self) -> DMatrix<f64> {
        &self.left * self.left.transpose()
    }

    /// `sigma^2 * ||z(x_i)||^2` at each training point, as a standard deviation.
    pub fn pointwise_sd(&self) -> Vec<f64> {
        let s2 = self.residual_variance.unwrap_or(f64::NAN);
        self.hat_diagonal.iter().map(|h| (s2 * h).sqrt()).collect()
    }

    fn scaled_row(&self, x: f64) -> Vec<f64> {
        basis_row(self.scaling.apply(x), &self.scaled_knots, self.basis.degree)
    }

    fn eval(&self, x: f64) -> f64 {
        dot(&self.scaled_row(x), &self.scaled_coefficients)
    }

    /// Standard deviation of the fitted curve at arbitrary `x`.
    pub fn prediction_sd(&self, x: f64) -> f64 {
        let s2 = self.residual_variance.unwrap_or(f64::NAN);
        let z = DVector::from_vec(self.scaled_row(x));
        let w = &self.precision_factor * z;
        (s2 * w.norm_squared()).sqrt()
    }

    /// `order`-th derivative of the fitted curve at `x`.
    pub fn derivative(&self, x: f64, order: usize) -> f64 {
        let t = self.scaling.apply(x);
        let d = self.basis.degree;
        let falling = |p: usize| -> f64 { (0..order).map(|i| (p - i) as f64).product() };
        let mut acc = 0.0;
        for p in order..=d {
            acc += self.scaled_coefficients[p] * falling(p) * t.powi((p - order) as i32);
        }
        if order <= d {
            for (k, &knot) in self.scaled_knots.iter().enumerate() {
                if t > knot {
                    acc += self.scaled_coefficients[d + 1 + k] * falling(d) * (t - knot).powi((d - order) as i32);
                }
            }
        }
        acc / self.scaling.span.powi(order as i32)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Ordinary least squares on a spline design.
pub fn fit_ols(design: &DesignMatrix, y: &[f64]) -> Result<SplineModel> {
    let n = design.rows();
    let j = design.cols();
    if y.len() != n {
        return Err(Error::LengthMismatch(format!("{} responses for {} rows", y.len(), n)));
    }
    if n < j {
        return Err(Error::Underdetermined { rows: n, cols: j });
    }
    let degree = design.basis.degree;
    let lo = design.x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = design.x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let scaling = Scaling { offset: lo, span };
    let scaled_knots: Vec<f64> = design.basis.knots.interior_knots.iter().map(|&k| scaling.apply(k)).collect();

    let z = DMatrix::from_fn(n, j, |i, c| basis_row(scaling.apply(design.x[i]), &scaled_knots, degree)[c]);
    let svd = z.clone().svd(true, true);
    let sigma_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    if sigma_max == 0.0 || svd.singular_values.iter().any(|&s| s < RANK_TOL * sigma_max) {
        return Err(Error::RankDeficient {
            columns: dependent_columns(&z, RANK_TOL * sigma_max),
        });
    }
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    let inv_sigma = DMatrix::from_diagonal(&svd.singular_values.map(|s| 1.0 / s));
    let precision_factor = &inv_sigma * &v_t;
    let y_vec = DVector::from_column_slice(y);
    // beta = V Sigma^-1 U^T y
    let scaled_coefficients: Vec<f64> = (precision_factor.transpose() * (u.transpose() * &y_vec))
        .iter()
        .copied()
        .collect();

    let coefficients = unscale_coefficients(&scaled_coefficients, degree, scaling);
    let fitted: Vec<f64> = (0..n)
        .map(|i| dot(&basis_row(scaling.apply(design.x[i]), &scaled_knots, degree), &scaled_coefficients))
        .collect();
    let hat_diagonal: Vec<f64> = (0..n).map(|i| u.row(i).norm_squared()).collect();

    let rss: f64 = y.iter().zip(&fitted).map(|(a, b)| (a - b).powi(2)).sum();
    let mean = y.iter().sum::<f64>() / n as f64;
    let tss: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let r_squared = if tss > 0.0 {
        1.0 - rss / tss
    } else if rss == 0.0 {
        1.0
    } else {
        0.0
    };
    let residual_variance = (n > j).then(|| rss / (n - j) as f64);
    let loocv = closed_form_loocv(y, &fitted, &hat_diagonal).ok();

    Ok(SplineModel {
        basis: design.basis.clone(),
        coefficients,
        x: design.x.clone(),
        y: y.to_vec(),
        fitted,
        residual_variance,
        hat_diagonal,
        loocv,
        r_squared,
        rss,
        scaling,
        scaled_knots,
        scaled_coefficients,
        left: u,
        precision_factor,
    })
}

/// Columns that add no rank when scanned left to right.
fn dependent_columns(z: &DMatrix<f64>, abs_tol: f64) -> Vec<usize> {
    let mut kept: Vec<usize> = Vec::new();
    let mut dependent = Vec::new();
    for c in 0..z.ncols() {
        let mut trial = kept.clone();
        trial.push(c);
        let sub = z.select_columns(trial.iter());
        let sv = sub.singular_values();
        if sv.iter().filter(|&&s| s > abs_tol).count() == trial.len() {
            kept.push(c);
        } else {
            dependent.push(c);
        }
    }
    dependent
}

/// Maps coefficients on the `[0, 1]`-scaled basis back to the raw basis.
#[allow(clippy::needless_range_loop)]
fn unscale_coefficients(scaled: &[f64], degree: usize, scaling: Scaling) -> Vec<f64> {
    let Scaling { offset, span } = scaling;
    let mut raw = vec![0.0; scaled.len()];
    // sum_p c_p ((x - a)/s)^p = sum_q x^q sum_{p>=q} c_p s^-p C(p,q) (-a)^(p-q)
    for p in 0..=degree {
        let cp = scaled[p] / span.powi(p as i32);
        for q in 0..=p {
            raw[q] += cp * binomial(p, q) * (-offset).powi((p - q) as i32);
        }
    }
    // ((x - xi)/s)_+^d = s^-d (x - xi)_+^d
    let shrink = span.powi(degree as i32);
    for k in degree + 1..scaled.len() {
        raw[k] = scaled[k] / shrink;
    }
    raw
}

fn closed_form_loocv(y: &[f64], fitted: &[f64], hat: &[f64]) -> Result<f64> {
    let mut acc = 0.0;
    for (i, ((yi, fi), hi)) in y.iter().zip(fitted).zip(hat).enumerate() {
        if *hi >= 1.0 - LEVERAGE_ONE_TOL {
            return Err(Error::InterpolatingPoint { index: i });
        }
        acc += ((yi - fi) / (1.0 - hi)).powi(2);
    }
    Ok(acc / y.len() as f64)
}

/// Closed-form leave-one-out score `1/n sum ((y_i - yhat_i) / (1 - z_ii))^2`.
pub fn loocv(model: &SplineModel) -> Result<f64> {
    closed_form_loocv(&model.y, &model.fitted, &model.hat_diagonal)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub values: Vec<f64>,
    /// True where the abscissa lies outside the training range.
    pub extrapolated: Vec<bool>,
}

pub fn predict(model: &SplineModel, x_new: &[f64]) -> Prediction {
    let lo = model.scaling.offset;
    let hi = lo + model.scaling.span;
    Prediction {
        values: x_new.iter().map(|&x| model.eval(x)).collect(),
        extrapolated: x_new.iter().map(|&x| x < lo || x > hi).collect(),
    }
}
