//! Savage-Dickey density ratio: a BFF from a marginal posterior and a prior.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use num_traits::Float;

use super::{BffModel, Bounds, Locality};
use crate::{Error, Result};

type LogDensity = dyn Fn(&[f64]) -> Result<f64> + Send + Sync;

/// A (log) density on a box.
pub struct DensityFn {
    log_density: Box<LogDensity>,
    pub domain: Vec<Bounds>,
    pub locality: Locality,
    /// Integrates to one over `domain`.
    pub proper: bool,
    pub label: String,
}

impl DensityFn {
    pub fn new<F>(label: impl Into<String>, domain: Vec<Bounds>, f: F) -> Self
    where
        F: Fn(&[f64]) -> Result<f64> + Send + Sync + 'static,
    {
        Self {
            log_density: Box::new(f),
            domain,
            locality: Locality::Global,
            proper: true,
            label: label.into(),
        }
    }

    pub fn with_locality(mut self, locality: Locality) -> Self {
        self.locality = locality;
        self
    }

    pub fn improper(mut self) -> Self {
        self.proper = false;
        self
    }

    /// `N(mean, variance)` on the real line.
    pub fn normal(mean: f64, variance: f64) -> Result<Self> {
        if !(variance > 0.0 && variance.is_finite() && mean.is_finite()) {
            return Err(Error::domain(alloc::format!("normal density needs finite mean and variance > 0, got ({mean}, {variance})")));
        }
        Ok(Self::new(
            alloc::format!("normal(m={mean},v={variance})"),
            alloc::vec![Bounds::REAL],
            move |x: &[f64]| Ok(crate::specfun::normal_log_density_unchecked(x[0], mean, variance)),
        ))
    }

    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        (self.log_density)(x)
    }
}

impl core::fmt::Debug for DensityFn {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("DensityFn")
            .field("label", &self.label)
            .field("domain", &self.domain)
            .field("locality", &self.locality)
            .field("proper", &self.proper)
            .finish_non_exhaustive()
    }
}

/// `ln BF01(theta0) = ln p(theta0 | y, H1) - ln p(theta0 | H1)`.
#[derive(Debug)]
pub struct SavageDickeyBff {
    posterior: DensityFn,
    prior: DensityFn,
}

impl SavageDickeyBff {
    pub fn posterior(&self) -> &DensityFn {
        &self.posterior
    }

    pub fn prior(&self) -> &DensityFn {
        &self.prior
    }
}

fn log_ratio(posterior: &DensityFn, prior: &DensityFn, theta0: &[f64]) -> Result<f64> {
    let lp = prior.log_density(theta0)?;
    if lp == f64::NEG_INFINITY {
        return Err(Error::numerical("savage_dickey", "prior density is zero").at(theta0));
    }
    let lq = posterior.log_density(theta0)?;
    Ok(lq - lp)
}

impl BffModel for SavageDickeyBff {
    fn log_bff(&self, theta0: &[f64]) -> Result<f64> {
        log_ratio(&self.posterior, &self.prior, theta0)
    }

    fn domain(&self) -> Vec<Bounds> {
        self.prior.domain.clone()
    }

    fn descriptor(&self) -> String {
        alloc::format!("savage-dickey[{} / {}]", self.posterior.label, self.prior.label)
    }
}

/// BFF as the ratio of marginal posterior to prior density.
///
/// Only valid for a proper prior that does not depend on the tested value.
pub fn savage_dickey_bff(posterior: DensityFn, prior: DensityFn) -> Result<SavageDickeyBff> {
    if prior.locality == Locality::Local || posterior.locality == Locality::Local {
        return Err(Error::Contract(
            "Savage-Dickey ratio needs a global prior; a local prior moves with theta0".into(),
        ));
    }
    if !prior.proper {
        return Err(Error::Contract("Savage-Dickey ratio needs a proper prior".into()));
    }
    if prior.domain.len() != posterior.domain.len() {
        return Err(Error::Contract(alloc::format!(
            "prior has dimension {} but posterior has dimension {}",
            prior.domain.len(),
            posterior.domain.len()
        )));
    }
    Ok(SavageDickeyBff { posterior, prior })
}

/// Relative belief ratio `p(theta | y) / p(theta)`; the Savage-Dickey BFF on the ratio scale.
pub fn relative_belief_ratio(posterior: &DensityFn, prior: &DensityFn, theta: &[f64]) -> Result<f64> {
    if prior.locality == Locality::Local || !prior.proper {
        return Err(Error::Contract("relative belief ratio needs a proper global prior".into()));
    }
    log_ratio(posterior, prior, theta).map(f64::exp)
}
