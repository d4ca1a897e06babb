//! Random-effects meta-analysis: `y_i | theta, tau ~ N(theta, sigma_i^2 + tau^2)`.
//!
//! BFFs for the joint null `(theta, tau) = (theta0, tau0)` and for each
//! parameter with the other integrated over its prior (the same prior under
//! both hypotheses). The marginal likelihood under the alternative is a
//! nested log-space quadrature computed once per [`MetaAnalysis`].

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, StandardNormal};

use crate::binomial::TruncBetaPrior;
use crate::engine::{BffModel, Bounds};
use crate::quad::{log_integrate, QuadOptions};
use crate::specfun::{beta_log_density, half_normal_log_density_unchecked, normal_log_density_unchecked, LN_2PI};
use crate::{Error, PriorSpec, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MetaDataset {
    pub estimates: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub ids: Option<Vec<String>>,
}

impl MetaDataset {
    pub fn new(estimates: Vec<f64>, std_errors: Vec<f64>, ids: Option<Vec<String>>) -> Result<Self> {
        if estimates.len() != std_errors.len() {
            return Err(Error::domain(alloc::format!(
                "{} estimates but {} standard errors",
                estimates.len(),
                std_errors.len()
            )));
        }
        if estimates.len() < 2 {
            return Err(Error::domain("meta-analysis needs at least two studies"));
        }
        if let Some(ids) = &ids {
            if ids.len() != estimates.len() {
                return Err(Error::domain("ids and estimates differ in length"));
            }
        }
        if let Some(i) = estimates.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(alloc::format!("estimate {i} is not finite")));
        }
        if let Some(i) = std_errors.iter().position(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::domain(alloc::format!("standard error {i} must be > 0, got {}", std_errors[i])));
        }
        Ok(Self { estimates, std_errors, ids })
    }

    pub fn len(&self) -> usize {
        self.estimates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.estimates.is_empty()
    }
}

/// Prior on the mean effect.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThetaPrior {
    TruncBeta(TruncBetaPrior),
    Normal { mean: f64, variance: f64 },
}

impl TryFrom<PriorSpec> for ThetaPrior {
    type Error = Error;

    fn try_from(p: PriorSpec) -> Result<Self> {
        p.validate()?;
        match p {
            PriorSpec::TruncBeta { .. } => Ok(ThetaPrior::TruncBeta(p.try_into()?)),
            PriorSpec::GlobalNormal { mean, variance } => Ok(ThetaPrior::Normal { mean, variance }),
            other => Err(Error::domain(alloc::format!("'{other}' is not a prior for the mean effect"))),
        }
    }
}

impl From<ThetaPrior> for PriorSpec {
    fn from(p: ThetaPrior) -> Self {
        match p {
            ThetaPrior::TruncBeta(b) => b.into(),
            ThetaPrior::Normal { mean, variance } => PriorSpec::GlobalNormal { mean, variance },
        }
    }
}

/// Independent priors: `theta` as given, `tau` half-normal with scale `tau_scale`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetaPriors {
    pub theta: ThetaPrior,
    pub tau_scale: f64,
}

/// `tau` is integrated over `[0, TAU_RANGE * s]`; the half-normal mass beyond is below 1e-22.
const TAU_RANGE: f64 = 10.0;
/// A normal `theta` prior is integrated over `mean +- THETA_RANGE * sd`.
const THETA_RANGE: f64 = 10.0;

/// `sum_i ln N(y_i | theta, sigma_i^2 + tau^2)`
pub fn meta_loglik(data: &MetaDataset, theta: f64, tau: f64) -> Result<f64> {
    if !(tau >= 0.0) {
        return Err(Error::domain(alloc::format!("tau must be >= 0, got {tau}")));
    }
    if !theta.is_finite() || !tau.is_finite() {
        return Err(Error::domain("theta and tau must be finite"));
    }
    Ok(loglik_unchecked(data, theta, tau))
}

fn loglik_unchecked(data: &MetaDataset, theta: f64, tau: f64) -> f64 {
    let t2 = tau * tau;
    data.estimates
        .iter()
        .zip(&data.std_errors)
        .map(|(&y, &s)| {
            let var = s * s + t2;
            let d = y - theta;
            -0.5 * (LN_2PI + var.ln()) - d * d / (2.0 * var)
        })
        .sum()
}

/// Data, priors and the cached log marginal likelihood under the alternative.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaAnalysis {
    pub data: MetaDataset,
    pub priors: MetaPriors,
    /// `ln integral integral exp{loglik(theta, tau)} p(theta) p(tau) dtheta dtau`
    pub log_denominator: f64,
    /// Estimated relative error of the denominator.
    pub denominator_error: f64,
    theta_log_norm: f64,
}

fn inner_opts() -> QuadOptions {
    QuadOptions { abs_tol: 0.0, rel_tol: 1e-9, max_subdivisions: 4000 }
}

fn outer_opts() -> QuadOptions {
    QuadOptions { abs_tol: 0.0, rel_tol: 1e-8, max_subdivisions: 4000 }
}

impl MetaAnalysis {
    pub fn new(data: MetaDataset, priors: MetaPriors) -> Result<Self> {
        let data = MetaDataset::new(data.estimates, data.std_errors, data.ids)?;
        PriorSpec::from(priors.theta).validate()?;
        PriorSpec::HalfNormal { scale: priors.tau_scale }.validate()?;
        let theta_log_norm = match priors.theta {
            ThetaPrior::TruncBeta(b) => b.log_mass()?,
            ThetaPrior::Normal { .. } => 0.0,
        };
        let mut this = Self { data, priors, log_denominator: f64::NAN, denominator_error: f64::NAN, theta_log_norm };
        let mut failure = None;
        let outer = log_integrate(
            |tau| match this.log_theta_integral(tau) {
                Ok((v, _)) => v + half_normal_log_density_unchecked(tau, priors.tau_scale),
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NEG_INFINITY
                }
            },
            0.0,
            this.tau_upper(),
            &outer_opts(),
        )
        .map_err(|e| Error::numerical("meta denominator", alloc::format!("outer quadrature over tau: {e}")))?;
        if let Some(e) = failure {
            return Err(Error::numerical("meta denominator", alloc::format!("inner quadrature over theta: {e}")));
        }
        if !outer.log_value.is_finite() {
            return Err(Error::numerical("meta denominator", "marginal likelihood underflowed"));
        }
        this.log_denominator = outer.log_value;
        this.denominator_error = outer.rel_error;
        Ok(this)
    }

    fn tau_upper(&self) -> f64 {
        TAU_RANGE * self.priors.tau_scale
    }

    pub fn theta_support(&self) -> (f64, f64) {
        match self.priors.theta {
            ThetaPrior::TruncBeta(b) => (b.l, b.u),
            ThetaPrior::Normal { mean, variance } => {
                let sd = variance.sqrt();
                (mean - THETA_RANGE * sd, mean + THETA_RANGE * sd)
            }
        }
    }

    fn theta_log_prior(&self, theta: f64) -> f64 {
        match self.priors.theta {
            ThetaPrior::TruncBeta(b) => {
                if theta < b.l || theta > b.u {
                    f64::NEG_INFINITY
                } else {
                    beta_log_density(theta, b.a, b.b) - self.theta_log_norm
                }
            }
            ThetaPrior::Normal { mean, variance } => normal_log_density_unchecked(theta, mean, variance),
        }
    }

    /// `ln integral exp{loglik(theta, tau)} p(theta) dtheta` and its relative error.
    fn log_theta_integral(&self, tau: f64) -> Result<(f64, f64)> {
        let (lo, hi) = self.theta_support();
        let r = log_integrate(
            |theta| loglik_unchecked(&self.data, theta, tau) + self.theta_log_prior(theta),
            lo,
            hi,
            &inner_opts(),
        )?;
        Ok((r.log_value, r.rel_error))
    }

    /// `ln integral exp{loglik(theta, tau)} p(tau) dtau`
    fn log_tau_integral(&self, theta: f64) -> Result<f64> {
        let s = self.priors.tau_scale;
        let r = log_integrate(
            |tau| loglik_unchecked(&self.data, theta, tau) + half_normal_log_density_unchecked(tau, s),
            0.0,
            self.tau_upper(),
            &inner_opts(),
        )?;
        Ok(r.log_value)
    }

    pub fn joint(self: &Arc<Self>) -> MetaBff {
        MetaBff { analysis: Arc::clone(self), kind: MetaBffKind::Joint }
    }

    pub fn marginal_theta(self: &Arc<Self>) -> MetaBff {
        MetaBff { analysis: Arc::clone(self), kind: MetaBffKind::MarginalTheta }
    }

    pub fn marginal_tau(self: &Arc<Self>) -> MetaBff {
        MetaBff { analysis: Arc::clone(self), kind: MetaBffKind::MarginalTau }
    }

    fn theta_domain(&self) -> Bounds {
        match self.priors.theta {
            ThetaPrior::TruncBeta(_) => Bounds::UNIT,
            ThetaPrior::Normal { .. } => Bounds::REAL,
        }
    }

    fn descriptor(&self) -> String {
        alloc::format!(
            "meta(k={}) theta~{} tau~halfnormal:s={}",
            self.data.len(),
            PriorSpec::from(self.priors.theta),
            self.priors.tau_scale
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetaBffKind {
    /// Tests `(theta, tau) = (theta0, tau0)`.
    Joint,
    /// Tests `theta = theta0`, `tau` a nuisance parameter.
    MarginalTheta,
    /// Tests `tau = tau0`, `theta` a nuisance parameter.
    MarginalTau,
}

#[derive(Debug, Clone)]
pub struct MetaBff {
    pub analysis: Arc<MetaAnalysis>,
    pub kind: MetaBffKind,
}

impl BffModel for MetaBff {
    fn log_bff(&self, theta0: &[f64]) -> Result<f64> {
        let a = &*self.analysis;
        let check_tau = |tau: f64| {
            if tau >= 0.0 && tau.is_finite() {
                Ok(())
            } else {
                Err(Error::domain(alloc::format!("tau0 must be finite and >= 0, got {tau}")))
            }
        };
        let numerator = match self.kind {
            MetaBffKind::Joint => {
                check_tau(theta0[1])?;
                meta_loglik(&a.data, theta0[0], theta0[1])?
            }
            MetaBffKind::MarginalTheta => {
                if !theta0[0].is_finite() {
                    return Err(Error::domain("theta0 must be finite"));
                }
                a.log_tau_integral(theta0[0])?
            }
            MetaBffKind::MarginalTau => {
                check_tau(theta0[0])?;
                a.log_theta_integral(theta0[0])?.0
            }
        };
        Ok(numerator - a.log_denominator)
    }

    fn domain(&self) -> Vec<Bounds> {
        match self.kind {
            MetaBffKind::Joint => vec![self.analysis.theta_domain(), Bounds::NONNEGATIVE],
            MetaBffKind::MarginalTheta => vec![self.analysis.theta_domain()],
            MetaBffKind::MarginalTau => vec![Bounds::NONNEGATIVE],
        }
    }

    fn descriptor(&self) -> String {
        let which = match self.kind {
            MetaBffKind::Joint => "joint",
            MetaBffKind::MarginalTheta => "marginal-theta",
            MetaBffKind::MarginalTau => "marginal-tau",
        };
        alloc::format!("{} {which}", self.analysis.descriptor())
    }
}

pub fn meta_joint_bff(data: MetaDataset, priors: MetaPriors) -> Result<MetaBff> {
    Ok(Arc::new(MetaAnalysis::new(data, priors)?).joint())
}

pub fn meta_marginal_theta_bff(data: MetaDataset, priors: MetaPriors) -> Result<MetaBff> {
    Ok(Arc::new(MetaAnalysis::new(data, priors)?).marginal_theta())
}

pub fn meta_marginal_tau_bff(data: MetaDataset, priors: MetaPriors) -> Result<MetaBff> {
    Ok(Arc::new(MetaAnalysis::new(data, priors)?).marginal_tau())
}

/// Plain Monte Carlo estimate of the log marginal likelihood under the
/// alternative from `draws` prior draws, with its delta-method standard error.
pub fn meta_denominator_mc(data: &MetaDataset, priors: &MetaPriors, draws: usize, seed: u64) -> Result<(f64, f64)> {
    if draws < 2 {
        return Err(Error::domain("need at least two draws"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let beta = match priors.theta {
        ThetaPrior::TruncBeta(b) => Some(
            (Beta::new(b.a, b.b).map_err(|e| Error::domain(alloc::format!("beta sampler: {e}")))?, b.l, b.u),
        ),
        ThetaPrior::Normal { .. } => None,
    };
    let mut logs = Vec::with_capacity(draws);
    for _ in 0..draws {
        let theta = match (&beta, priors.theta) {
            (Some((dist, l, u)), _) => {
                let mut tries = 0;
                loop {
                    let t: f64 = dist.sample(&mut rng);
                    if t >= *l && t <= *u {
                        break t;
                    }
                    tries += 1;
                    if tries > 10_000 {
                        return Err(Error::numerical("meta_denominator_mc", "truncation interval has too little prior mass for rejection sampling"));
                    }
                }
            }
            (None, ThetaPrior::Normal { mean, variance }) => {
                let z: f64 = StandardNormal.sample(&mut rng);
                mean + variance.sqrt() * z
            }
            (None, ThetaPrior::TruncBeta(_)) => unreachable!(),
        };
        let z: f64 = StandardNormal.sample(&mut rng);
        let tau = priors.tau_scale * z.abs();
        logs.push(loglik_unchecked(data, theta, tau));
    }
    let peak = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logs.iter().map(|l| (l - peak).exp()).collect();
    let n = draws as f64;
    let mean = w.iter().sum::<f64>() / n;
    let var = w.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((peak + mean.ln(), (var / n).sqrt() / mean))
}
