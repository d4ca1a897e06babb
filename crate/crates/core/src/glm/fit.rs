use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;

use super::{GlmDataset, GlmPrior};
use crate::engine::{Bounds, DensityFn};
use crate::linalg::Matrix;
use crate::specfun::normal_log_density_unchecked;
use crate::{Error, Result};

const GRAD_TOL: f64 = 1e-8;
const MAX_ITER: usize = 100;
/// A coefficient this large on the logit scale points at (quasi-)separation.
const SEPARATION_BOUND: f64 = 15.0;

/// Posterior mode of a logistic regression.
#[derive(Debug, Clone, PartialEq)]
pub struct MapFit {
    pub mode: Vec<f64>,
    /// Negative Hessian of the log posterior at the mode.
    pub neg_hessian: Matrix,
    pub converged: bool,
    pub iterations: usize,
    /// Some coefficient exceeded the separation bound during the iterations.
    pub separation_suspected: bool,
}

impl MapFit {
    /// `(-H)^{-1}`
    pub fn covariance(&self) -> Result<Matrix> {
        Ok(self.neg_hessian.cholesky()?.inverse())
    }

    pub fn std_errors(&self) -> Result<Vec<f64>> {
        let cov = self.covariance()?;
        Ok((0..cov.rows()).map(|i| cov[(i, i)].sqrt()).collect())
    }
}

#[inline]
pub(crate) fn log1p_exp(x: f64) -> f64 {
    if x > 0.0 { x + (-x).exp().ln_1p() } else { x.exp().ln_1p() }
}

/// Logistic log-likelihood `sum{y eta - ln(1 + e^eta)}`.
pub fn log_likelihood(data: &GlmDataset, beta: &[f64]) -> f64 {
    data.design
        .mul_vec(beta)
        .iter()
        .zip(&data.outcome)
        .map(|(&eta, &y)| if y { eta - log1p_exp(eta) } else { -log1p_exp(eta) })
        .sum()
}

pub fn log_posterior(data: &GlmDataset, prior: &GlmPrior, beta: &[f64]) -> f64 {
    log_likelihood(data, beta) + prior.log_density(beta)
}

struct Derivatives {
    value: f64,
    gradient: Vec<f64>,
    neg_hessian: Matrix,
}

fn derivatives(data: &GlmDataset, prior: &GlmPrior, beta: &[f64]) -> Derivatives {
    let p = beta.len();
    let eta = data.design.mul_vec(beta);
    let mut gradient = vec![0.0; p];
    let mut neg_hessian = Matrix::zeros(p, p);
    let mut value = 0.0;
    for (i, (&e, &y)) in eta.iter().zip(&data.outcome).enumerate() {
        let row = data.design.row(i);
        let prob = 1.0 / (1.0 + (-e).exp());
        let w = prob * (1.0 - prob);
        let r = if y { 1.0 } else { 0.0 } - prob;
        value += if y { e - log1p_exp(e) } else { -log1p_exp(e) };
        for a in 0..p {
            gradient[a] += row[a] * r;
            let wa = w * row[a];
            for b in 0..=a {
                neg_hessian[(a, b)] += wa * row[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            neg_hessian[(b, a)] = neg_hessian[(a, b)];
        }
        let precision = prior.precision(a);
        gradient[a] -= precision * beta[a];
        neg_hessian[(a, a)] += precision;
    }
    Derivatives { value: value + prior.log_density(beta), gradient, neg_hessian }
}

/// Newton ascent on the log posterior, with step halving.
pub fn fit_map(data: &GlmDataset, prior: &GlmPrior) -> Result<MapFit> {
    prior.check_len(data.n_coefficients())?;
    let p = data.n_coefficients();
    let mut beta = vec![0.0; p];
    let mut separation = false;
    let mut d = derivatives(data, prior, &beta);
    for it in 0..MAX_ITER {
        let gmax = d.gradient.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if gmax < GRAD_TOL {
            // a vanishing gradient far out along an unpenalized direction is an
            // asymptote, not a mode
            if (0..p).any(|j| prior.precision(j) == 0.0 && beta[j].abs() > SEPARATION_BOUND) {
                return Err(not_converged("estimates diverge", true));
            }
            return Ok(MapFit { mode: beta, neg_hessian: d.neg_hessian, converged: true, iterations: it, separation_suspected: separation });
        }
        let chol = d.neg_hessian.cholesky().map_err(|_| singular(separation))?;
        let step = chol.solve(&d.gradient);
        let mut t = 1.0;
        let next = loop {
            let cand: Vec<f64> = beta.iter().zip(&step).map(|(b, s)| b + t * s).collect();
            let nd = derivatives(data, prior, &cand);
            if nd.value.is_finite() && nd.value >= d.value - 1e-12 * d.value.abs() {
                break Some((cand, nd));
            }
            t *= 0.5;
            if t < 1e-10 {
                break None;
            }
        };
        let Some((cand, nd)) = next else {
            return Err(not_converged("line search failed", separation));
        };
        beta = cand;
        d = nd;
        if beta.iter().any(|b| b.abs() > SEPARATION_BOUND) {
            separation = true;
        }
    }
    Err(not_converged("no convergence in 100 Newton iterations", separation))
}

fn separation_note(separation: bool) -> &'static str {
    if separation {
        "; a coefficient exceeded |15| on the logit scale: the data look (quasi-)separated"
    } else {
        ""
    }
}

fn singular(separation: bool) -> Error {
    Error::numerical("fit_map", alloc::format!("negative Hessian is singular{}", separation_note(separation)))
}

fn not_converged(what: &str, separation: bool) -> Error {
    Error::numerical("fit_map", alloc::format!("{what}{}", separation_note(separation)))
}

/// Maximum likelihood fit (flat priors on all coefficients).
pub fn fit_mle(data: &GlmDataset) -> Result<MapFit> {
    fit_map(data, &GlmPrior::flat(data.n_coefficients()))
}

/// Normal approximation `N(mode_j, [(-H)^{-1}]_jj)` to the marginal posterior of coefficient `j`.
pub fn laplace_marginal_posterior(fit: &MapFit, j: usize) -> Result<DensityFn> {
    if !fit.converged {
        return Err(Error::Contract("Laplace marginal needs a converged fit".into()));
    }
    if j >= fit.mode.len() {
        return Err(Error::domain(alloc::format!("coefficient index {j} out of range")));
    }
    let var = fit.covariance()?[(j, j)];
    let mean = fit.mode[j];
    Ok(DensityFn::new(
        alloc::format!("laplace posterior of coefficient {j}"),
        vec![Bounds::REAL],
        move |x: &[f64]| Ok(normal_log_density_unchecked(x[0], mean, var)),
    ))
}
