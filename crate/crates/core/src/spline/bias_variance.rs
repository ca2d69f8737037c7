//! Monte-Carlo estimate of the squared-loss decomposition
//! `expected_loss = bias^2 + variance + noise` for a spline fitter.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{build_basis, fit_ols, predict};
use crate::error::{Error, Result};
use crate::network::KnotPartition;

/// Data generator: responses `h(x) + N(0, sigma^2)` on a fixed design.
///
/// The design doubles as the evaluation grid, so `p(x)` is the empirical
/// distribution of `x`.
pub struct TruthModel {
    pub x: Vec<f64>,
    pub h: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    pub sigma: f64,
}

impl TruthModel {
    pub fn new(x: Vec<f64>, h: impl Fn(f64) -> f64 + Send + Sync + 'static, sigma: f64) -> Self {
        Self { x, h: Box::new(h), sigma }
    }

    /// One noisy draw of the responses.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        if self.sigma == 0.0 {
            return Ok(self.x.iter().map(|&x| (self.h)(x)).collect());
        }
        let noise = Normal::new(0.0, self.sigma).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Ok(self.x.iter().map(|&x| (self.h)(x) + noise.sample(rng)).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitterConfig {
    pub degree: usize,
    pub knots: KnotPartition,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasVarianceReport {
    pub bias_sq: f64,
    pub variance: f64,
    pub noise: f64,
    pub expected_loss: f64,
    pub mc_replicates: usize,
    /// Direct mean squared prediction error against the held-out targets.
    pub empirical_loss: f64,
    /// Monte-Carlo standard error of `empirical_loss` across replicates.
    pub empirical_loss_se: f64,
}

/// Replicate `r` draws from `ChaCha8Rng::seed_from_u64(seed + r)`: first the
/// training responses, then an independent set of targets used for the noise
/// term.
pub fn bias_variance_mc(
    truth: &TruthModel,
    fitter: &FitterConfig,
    replicates: usize,
    seed: u64,
) -> Result<BiasVarianceReport> {
    if replicates < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 replicates, got {replicates}")));
    }
    let n = truth.x.len();
    let lo = truth.x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = truth.x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if n < 2 || !(hi > lo) {
        return Err(Error::Degenerate("generator design has zero x-spread".into()));
    }
    if !(truth.sigma >= 0.0) || !truth.sigma.is_finite() {
        return Err(Error::InvalidArgument(format!("noise sd {} must be finite and >= 0", truth.sigma)));
    }
    let design = build_basis(&truth.x, &fitter.knots, fitter.degree)?;
    let h: Vec<f64> = truth.x.iter().map(|&x| (truth.h)(x)).collect();

    let mut predictions: Vec<Vec<f64>> = Vec::with_capacity(replicates);
    let mut noise_acc = 0.0;
    let mut losses = Vec::with_capacity(replicates);
    for r in 0..replicates {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(r as u64));
        let y = truth.sample(&mut rng)?;
        let model = fit_ols(&design, &y)?;
        let pred = predict(&model, &truth.x).values;
        let targets = truth.sample(&mut rng)?;
        noise_acc += h.iter().zip(&targets).map(|(a, t)| (a - t).powi(2)).sum::<f64>();
        losses.push(pred.iter().zip(&targets).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / n as f64);
        predictions.push(pred);
    }

    let reps = replicates as f64;
    let mut bias_sq = 0.0;
    let mut variance = 0.0;
    for i in 0..n {
        let mean = predictions.iter().map(|p| p[i]).sum::<f64>() / reps;
        bias_sq += (mean - h[i]).powi(2);
        variance += predictions.iter().map(|p| (p[i] - mean).powi(2)).sum::<f64>() / reps;
    }
    bias_sq /= n as f64;
    variance /= n as f64;
    let noise = noise_acc / (reps * n as f64);
    let empirical_loss = losses.iter().sum::<f64>() / reps;
    let loss_var = losses.iter().map(|l| (l - empirical_loss).powi(2)).sum::<f64>() / (reps - 1.0);

    Ok(BiasVarianceReport {
        bias_sq,
        variance,
        noise,
        expected_loss: bias_sq + variance + noise,
        mc_replicates: replicates,
        empirical_loss,
        empirical_loss_se: (loss_var / reps).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Vec<f64> {
        (0..n).map(|i| i as f64 / (n - 1) as f64 * 6.0).collect()
    }

    #[test]
    fn noiseless_truth_in_class() {
        let truth = TruthModel::new(grid(20), |x| 1.0 + 2.0 * x - 0.3 * x * x, 0.0);
        let fitter = FitterConfig {
            degree: 2,
            knots: KnotPartition::user(vec![3.0]).unwrap(),
        };
        let r = bias_variance_mc(&truth, &fitter, 10, 1).unwrap();
        assert!(r.bias_sq < 1e-10 && r.variance < 1e-10 && r.noise == 0.0, "{r:?}");
    }

    #[test]
    fn components_sum() {
        let truth = TruthModel::new(grid(25), f64::sin, 0.2);
        let fitter = FitterConfig {
            degree: 1,
            knots: KnotPartition::none(),
        };
        let r = bias_variance_mc(&truth, &fitter, 50, 9).unwrap();
        assert_eq!(r.expected_loss, r.bias_sq + r.variance + r.noise);
        assert_eq!(r.mc_replicates, 50);
        assert_eq!(bias_variance_mc(&truth, &fitter, 50, 9).unwrap(), r);
    }

    #[test]
    fn rejects_degenerate_generators() {
        let fitter = FitterConfig {
            degree: 1,
            knots: KnotPartition::none(),
        };
        let flat = TruthModel::new(vec![2.0; 10], f64::sin, 0.1);
        assert!(matches!(bias_variance_mc(&flat, &fitter, 10, 0), Err(Error::Degenerate(_))));
        let ok = TruthModel::new(grid(10), f64::sin, 0.1);
        assert!(matches!(bias_variance_mc(&ok, &fitter, 1, 0), Err(Error::InvalidArgument(_))));
    }
}
