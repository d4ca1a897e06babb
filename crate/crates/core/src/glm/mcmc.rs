use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::fit::{fit_map, log_posterior};
use super::{GlmDataset, GlmPrior};
use crate::engine::Warning;
use crate::linalg::Matrix;
use crate::{Error, Result};

const TARGET_ACCEPTANCE: f64 = 0.234;
const ADAPT_BATCH: usize = 100;
const ACCEPTANCE_RANGE: (f64, f64) = (0.05, 0.7);

#[derive(Debug, Clone, PartialEq)]
pub struct McmcOutput {
    /// Retained draws, one row per draw.
    pub samples: Matrix,
    /// Acceptance rate after burn-in.
    pub acceptance_rate: f64,
    /// Proposal scale multiplier at the end of burn-in.
    pub scale: f64,
    pub warnings: Vec<Warning>,
}

impl McmcOutput {
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.samples.rows()).map(|i| self.samples[(i, j)]).collect()
    }
}

/// Random-walk Metropolis with Gaussian proposals `N(x, scale^2 * 2.38^2/d * cov)`.
///
/// `n_samples / 10` burn-in iterations precede the `n_samples` retained ones;
/// during burn-in the scale is adapted towards an acceptance rate of 0.234.
pub fn rw_metropolis(
    log_target: &dyn Fn(&[f64]) -> f64,
    start: &[f64],
    cov: &Matrix,
    n_samples: usize,
    seed: u64,
) -> Result<McmcOutput> {
    let d = start.len();
    if n_samples == 0 || d == 0 || cov.rows() != d || cov.cols() != d {
        return Err(Error::domain("sampler needs n_samples >= 1 and a d x d proposal covariance"));
    }
    let chol = cov.scaled(2.38 * 2.38 / d as f64).cholesky()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = start.to_vec();
    let mut fx = log_target(&x);
    if !fx.is_finite() {
        return Err(Error::numerical("rw_metropolis", "target density is zero at the start"));
    }
    let burn_in = n_samples / 10;
    let mut log_scale = 0.0f64;
    let mut batch_accepted = 0usize;
    let mut accepted = 0usize;
    let mut samples = Matrix::zeros(n_samples, d);
    let mut z = vec![0.0; d];
    let mut prop = vec![0.0; d];
    for it in 0..burn_in + n_samples {
        for v in z.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let step = chol.mul_lower(&z);
        let s = log_scale.exp();
        for i in 0..d {
            prop[i] = x[i] + s * step[i];
        }
        let fp = log_target(&prop);
        let u: f64 = rng.random();
        let accept = fp.is_finite() && u.ln() < fp - fx;
        if accept {
            x.copy_from_slice(&prop);
            fx = fp;
        }
        if it < burn_in {
            batch_accepted += accept as usize;
            if (it + 1) % ADAPT_BATCH == 0 {
                let rate = batch_accepted as f64 / ADAPT_BATCH as f64;
                let gain = 1.0 / (((it + 1) / ADAPT_BATCH) as f64).sqrt();
                log_scale += gain * (rate - TARGET_ACCEPTANCE) * 2.0;
                batch_accepted = 0;
            }
        } else {
            accepted += accept as usize;
            let row = it - burn_in;
            for i in 0..d {
                samples[(row, i)] = x[i];
            }
        }
    }
    let rate = accepted as f64 / n_samples as f64;
    let mut warnings = Vec::new();
    if !(ACCEPTANCE_RANGE.0..=ACCEPTANCE_RANGE.1).contains(&rate) {
        warnings.push(Warning::AcceptanceRate { rate });
    }
    Ok(McmcOutput { samples, acceptance_rate: rate, scale: log_scale.exp(), warnings })
}

/// Posterior draws of the logistic-regression coefficients, started at the
/// posterior mode with the Laplace covariance as proposal shape.
pub fn metropolis_sample(data: &GlmDataset, prior: &GlmPrior, n_samples: usize, seed: u64) -> Result<McmcOutput> {
    let fit = fit_map(data, prior)?;
    let cov = fit.covariance()?;
    rw_metropolis(&|b: &[f64]| log_posterior(data, prior, b), &fit.mode, &cov, n_samples, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_normal_target() {
        let target = |x: &[f64]| -0.5 * x.iter().map(|v| v * v).sum::<f64>();
        let out = rw_metropolis(&target, &[0.5, -0.5], &Matrix::identity(2), 40_000, 5).unwrap();
        for j in 0..2 {
            let col = out.column(j);
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / col.len() as f64;
            // effective sample size of RWM in 2D is roughly n / 10
            assert!(mean.abs() < 3.0 * (10.0 / col.len() as f64).sqrt(), "{mean}");
            assert!((var - 1.0).abs() < 0.1, "{var}");
        }
        assert!(out.warnings.is_empty());
        assert!((0.15..0.4).contains(&out.acceptance_rate), "{}", out.acceptance_rate);
    }

    #[test]
    fn deterministic_given_seed() {
        let target = |x: &[f64]| -0.5 * x[0] * x[0];
        let a = rw_metropolis(&target, &[0.0], &Matrix::identity(1), 500, 42).unwrap();
        let b = rw_metropolis(&target, &[0.0], &Matrix::identity(1), 500, 42).unwrap();
        assert_eq!(a, b);
        let c = rw_metropolis(&target, &[0.0], &Matrix::identity(1), 500, 43).unwrap();
        assert_ne!(a.samples, c.samples);
    }
}
