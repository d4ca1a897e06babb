//! Laplace approximation of the log BFF for models with nuisance parameters.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;

use crate::linalg::Matrix;
use crate::optim::{bfgs_max, fd_hessian, AscentResult};
use crate::specfun::LN_2PI;
use crate::{Error, Result};

/// Log-likelihoods and log-priors of a test of `theta = theta0` with nuisance
/// parameters `psi`, for a fixed `theta0`.
///
/// The null functions take `psi`; the alternative functions take `theta` and
/// `psi` concatenated, `theta` first.
pub struct LaplaceProblem<'a> {
    pub loglik0: &'a dyn Fn(&[f64]) -> f64,
    pub loglik1: &'a dyn Fn(&[f64]) -> f64,
    pub log_prior0: &'a dyn Fn(&[f64]) -> f64,
    pub log_prior1: &'a dyn Fn(&[f64]) -> f64,
    pub dim_theta: usize,
    pub dim_psi: usize,
    /// Sample size.
    pub n: usize,
    /// Starting points for the null maximization (default: the origin).
    pub starts0: Vec<Vec<f64>>,
    /// Starting points for the alternative maximization (default: the origin).
    pub starts1: Vec<Vec<f64>>,
}

/// The four terms of the approximation, and the maximizers they were built from.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplaceTerms {
    pub log_lik_ratio: f64,
    /// `dim(theta)/2 * ln(n / 2pi)`
    pub dimension: f64,
    pub log_prior_ratio: f64,
    /// `1/2 ln(|V0| / |V1|)`
    pub log_dispersion_ratio: f64,
    pub psi0_hat: Vec<f64>,
    /// `(theta1_hat, psi1_hat)`
    pub alt_hat: Vec<f64>,
}

impl LaplaceTerms {
    pub fn total(&self) -> f64 {
        self.log_lik_ratio + self.dimension + self.log_prior_ratio + self.log_dispersion_ratio
    }
}

const GRAD_TOL: f64 = 1e-7;
const MAX_ITER: usize = 1000;

fn maximize(f: &dyn Fn(&[f64]) -> f64, dim: usize, starts: &[Vec<f64>], term: &'static str) -> Result<AscentResult> {
    if dim == 0 {
        return Ok(AscentResult { x: Vec::new(), value: f(&[]), iterations: 0 });
    }
    let origin = [vec![0.0; dim]];
    let starts = if starts.is_empty() { &origin[..] } else { starts };
    let mut best: Option<AscentResult> = None;
    let mut last_err = None;
    for s in starts {
        if s.len() != dim {
            return Err(Error::domain(alloc::format!("{term}: start has length {}, expected {dim}", s.len())));
        }
        match bfgs_max(&f, s, GRAD_TOL, MAX_ITER) {
            Ok(r) if best.as_ref().is_none_or(|b| r.value > b.value) => best = Some(r),
            Ok(_) => {}
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| {
        Error::numerical(
            term,
            alloc::format!("maximization failed from every start: {}", last_err.map(|e| alloc::format!("{e}")).unwrap_or_default()),
        )
    })
}

/// `ln |n (-H)^{-1}|` for the Hessian `H` of `f` at `x`.
fn log_det_dispersion(f: &dyn Fn(&[f64]) -> f64, x: &[f64], n: usize, term: &'static str) -> Result<f64> {
    if x.is_empty() {
        return Ok(0.0);
    }
    let neg_h: Matrix = fd_hessian(&f, x).scaled(-1.0);
    let chol = neg_h.cholesky().map_err(|e| {
        Error::numerical(term, alloc::format!("negative Hessian is not positive definite ({e})"))
    })?;
    Ok(x.len() as f64 * (n as f64).ln() - chol.log_det())
}

pub fn laplace_terms(p: &LaplaceProblem<'_>) -> Result<LaplaceTerms> {
    if p.n == 0 || p.dim_theta == 0 {
        return Err(Error::domain("Laplace approximation needs n >= 1 and dim(theta) >= 1"));
    }
    let null = maximize(p.loglik0, p.dim_psi, &p.starts0, "null likelihood")?;
    let alt = maximize(p.loglik1, p.dim_theta + p.dim_psi, &p.starts1, "alternative likelihood")?;
    if !(null.value.is_finite() && alt.value.is_finite()) {
        return Err(Error::numerical("likelihood ratio", "maximized log-likelihood is not finite"));
    }
    let log_v0 = log_det_dispersion(p.loglik0, &null.x, p.n, "null dispersion")?;
    let log_v1 = log_det_dispersion(p.loglik1, &alt.x, p.n, "alternative dispersion")?;
    let lp0 = (p.log_prior0)(&null.x);
    let lp1 = (p.log_prior1)(&alt.x);
    if !lp1.is_finite() || lp0.is_nan() {
        return Err(Error::numerical("prior ratio", "alternative prior density is zero or undefined at the maximizer"));
    }
    Ok(LaplaceTerms {
        log_lik_ratio: null.value - alt.value,
        dimension: 0.5 * p.dim_theta as f64 * ((p.n as f64).ln() - LN_2PI),
        log_prior_ratio: lp0 - lp1,
        log_dispersion_ratio: 0.5 * (log_v0 - log_v1),
        psi0_hat: null.x,
        alt_hat: alt.x,
    })
}

/// Laplace approximation of `ln BF01(y; theta0)`; `theta0` is bound in the null functions.
pub fn laplace_log_bff(p: &LaplaceProblem<'_>) -> Result<f64> {
    laplace_terms(p).map(|t| t.total())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::normal_log_density_unchecked as npdf;

    // y_i ~ N(theta, 1), summarized by the mean; global prior N(m, v)
    fn exact(ybar: f64, n: f64, theta0: f64, m: f64, v: f64) -> f64 {
        let s2 = 1.0 / n;
        -0.5 * ((ybar - theta0).powi(2) / s2 - (ybar - m).powi(2) / (s2 + v)) + 0.5 * (1.0 + v / s2).ln()
    }

    fn approx(ybar: f64, n: usize, theta0: f64, m: f64, v: f64) -> LaplaceTerms {
        let nf = n as f64;
        let l0 = move |_: &[f64]| -0.5 * nf * (ybar - theta0).powi(2);
        let l1 = move |t: &[f64]| -0.5 * nf * (ybar - t[0]).powi(2);
        let p0 = |_: &[f64]| 0.0;
        let p1 = move |t: &[f64]| npdf(t[0], m, v);
        laplace_terms(&LaplaceProblem {
            loglik0: &l0,
            loglik1: &l1,
            log_prior0: &p0,
            log_prior1: &p1,
            dim_theta: 1,
            dim_psi: 0,
            n,
            starts0: vec![],
            starts1: vec![vec![ybar + 0.3]],
        })
        .unwrap()
    }

    #[test]
    fn normal_mean_error_shrinks() {
        let (ybar, theta0, m, v) = (0.2, 0.1, -0.1, 0.5);
        let mut prev = f64::INFINITY;
        for n in [100usize, 1000, 10_000] {
            let err = (approx(ybar, n, theta0, m, v).total() - exact(ybar, n as f64, theta0, m, v)).abs();
            assert!(err < prev, "n={n}: {err} !< {prev}");
            prev = err;
        }
        assert!(prev < 0.01);
    }

    #[test]
    fn at_mle_dimension_term_dominates() {
        let t = approx(0.2, 400, 0.2, 0.2, 1e4);
        assert!(t.log_lik_ratio.abs() < 1e-10);
        assert!((t.dimension - 0.5 * (400.0 / core::f64::consts::TAU).ln()).abs() < 1e-14);
        assert!(t.log_dispersion_ratio.abs() < 1e-6);
    }

    #[test]
    fn nuisance_parameter_model() {
        // y_i ~ N(theta, e^{2 psi}); sufficient statistics ybar and s2 (MLE variance)
        let (n, ybar, s2) = (200usize, 0.3, 1.4);
        let nf = n as f64;
        let ll = move |theta: f64, psi: f64| {
            -nf * psi - 0.5 * nf * (s2 + (ybar - theta).powi(2)) * (-2.0 * psi).exp()
        };
        let theta0 = 0.25;
        let l0 = move |p: &[f64]| ll(theta0, p[0]);
        let l1 = move |p: &[f64]| ll(p[0], p[1]);
        let p0 = |p: &[f64]| npdf(p[0], 0.0, 4.0);
        let p1 = |p: &[f64]| npdf(p[0], 0.0, 1.0) + npdf(p[1], 0.0, 4.0);
        let t = laplace_terms(&LaplaceProblem {
            loglik0: &l0,
            loglik1: &l1,
            log_prior0: &p0,
            log_prior1: &p1,
            dim_theta: 1,
            dim_psi: 1,
            n,
            starts0: vec![vec![0.0], vec![1.0]],
            starts1: vec![vec![0.0, 0.0]],
        })
        .unwrap();
        assert!((t.alt_hat[0] - ybar).abs() < 1e-5);
        assert!((t.alt_hat[1] - 0.5 * s2.ln()).abs() < 1e-5);
        let psi0 = 0.5 * (s2 + (ybar - theta0).powi(2)).ln();
        assert!((t.psi0_hat[0] - psi0).abs() < 1e-5);
        // -H1 = diag(n / s2, 2n), -H0 = 2n  =>  1/2 ln|V0|/|V1| = 1/2 [ln(n/s2) - ln n]
        assert!((t.log_dispersion_ratio - 0.5 * (1.0 / s2).ln()).abs() < 1e-4);
    }
}
