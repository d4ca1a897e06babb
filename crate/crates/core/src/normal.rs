//! Normal-mean BFFs with known variance: closed forms for global, local and
//! shifted point priors, the replication BFF, the unit-variance form and its
//! sampling distribution, and the integrated-likelihood variance estimate.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::engine::{
    BffModel, Bounds, DensityFn, Locality, MeeResult, SupportInterval, SupportSet, Warning,
};
use crate::specfun::{noncentral_chisq_cdf, normal_log_density_unchecked, LN_2PI};
use crate::{Error, PriorSpec, Result};

/// An estimate and its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalSummary {
    pub y: f64,
    pub sigma: f64,
}

impl NormalSummary {
    pub fn new(y: f64, sigma: f64) -> Result<Self> {
        if !y.is_finite() {
            return Err(Error::domain(alloc::format!("estimate must be finite, got {y}")));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::domain(alloc::format!("standard error must be > 0, got {sigma}")));
        }
        Ok(Self { y, sigma })
    }

    pub fn var(&self) -> f64 {
        self.sigma * self.sigma
    }

    /// Inverse-variance pooling of independent estimates of the same mean.
    /// The pooled summary is sufficient: the BFF of all batches equals the
    /// BFF of the pooled estimate.
    pub fn pool(batches: &[NormalSummary]) -> Result<Self> {
        if batches.is_empty() {
            return Err(Error::domain("cannot pool zero batches"));
        }
        let precision: f64 = batches.iter().map(|b| 1.0 / b.var()).sum();
        let y = batches.iter().map(|b| b.y / b.var()).sum::<f64>() / precision;
        Self::new(y, (1.0 / precision).sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormalPrior {
    Global { mean: f64, variance: f64 },
    /// `N(theta0, variance)`
    Local { variance: f64 },
    /// Point mass at `theta0 + shift`.
    PointShift { shift: f64 },
}

impl NormalPrior {
    pub fn validate(&self) -> Result<()> {
        PriorSpec::from(*self).validate()
    }

    pub fn locality(&self) -> Locality {
        PriorSpec::from(*self).locality()
    }
}

impl From<NormalPrior> for PriorSpec {
    fn from(p: NormalPrior) -> Self {
        match p {
            NormalPrior::Global { mean, variance } => PriorSpec::GlobalNormal { mean, variance },
            NormalPrior::Local { variance } => PriorSpec::LocalNormal { variance },
            NormalPrior::PointShift { shift } => PriorSpec::PointShift { shift },
        }
    }
}

impl TryFrom<PriorSpec> for NormalPrior {
    type Error = Error;

    fn try_from(p: PriorSpec) -> Result<Self> {
        p.validate()?;
        match p {
            PriorSpec::GlobalNormal { mean, variance } => Ok(NormalPrior::Global { mean, variance }),
            PriorSpec::LocalNormal { variance } => Ok(NormalPrior::Local { variance }),
            PriorSpec::PointShift { shift } => Ok(NormalPrior::PointShift { shift }),
            other => Err(Error::domain(alloc::format!("'{other}' is not a prior for a normal mean"))),
        }
    }
}

/// Closed-form BFF of a normal mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalBff {
    pub data: NormalSummary,
    pub prior: NormalPrior,
}

pub fn normal_bff(data: NormalSummary, prior: NormalPrior) -> Result<NormalBff> {
    NormalSummary::new(data.y, data.sigma)?;
    prior.validate()?;
    Ok(NormalBff { data, prior })
}

impl NormalBff {
    pub fn eval(&self, theta0: f64) -> f64 {
        let (y, s2) = (self.data.y, self.data.var());
        match self.prior {
            NormalPrior::Global { mean, variance } => {
                -0.5 * ((y - theta0).powi(2) / s2 - (y - mean).powi(2) / (s2 + variance))
                    + 0.5 * (variance / s2).ln_1p()
            }
            NormalPrior::Local { variance } => {
                -0.5 * (y - theta0).powi(2) / (s2 * (1.0 + s2 / variance)) + 0.5 * (variance / s2).ln_1p()
            }
            NormalPrior::PointShift { shift } => (2.0 * shift * (theta0 - y) + shift * shift) / (2.0 * s2),
        }
    }
}

impl BffModel for NormalBff {
    fn log_bff(&self, theta0: &[f64]) -> Result<f64> {
        if !theta0[0].is_finite() {
            return Err(Error::domain("theta0 must be finite"));
        }
        Ok(self.eval(theta0[0]))
    }

    fn domain(&self) -> Vec<Bounds> {
        vec![Bounds::REAL]
    }

    fn descriptor(&self) -> String {
        alloc::format!("normal(y={},se={}) {}", self.data.y, self.data.sigma, PriorSpec::from(self.prior))
    }

    fn locality(&self) -> Locality {
        self.prior.locality()
    }
}

/// Closed-form MEE, `k_ME` and `k` support interval.
pub fn normal_closed_summaries(data: NormalSummary, prior: NormalPrior, k: f64) -> Result<(MeeResult, SupportSet)> {
    let model = normal_bff(data, prior)?;
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::domain(alloc::format!("support level k must be positive and finite, got {k}")));
    }
    let (y, sigma, s2) = (data.y, data.sigma, data.var());
    let symmetric = |radicand: f64, scale: f64| {
        if radicand < 0.0 {
            Vec::new()
        } else {
            let half = scale * radicand.sqrt();
            vec![SupportInterval { lo: y - half, hi: y + half, lo_unbounded: false, hi_unbounded: false }]
        }
    };
    let ln_k2 = 2.0 * k.ln();
    let (mee, intervals, warnings) = match prior {
        NormalPrior::Global { mean, variance } => {
            let radicand = (variance / s2).ln_1p() + (y - mean).powi(2) / (s2 + variance) - ln_k2;
            (MeeResult::found(vec![y], model.eval(y)), symmetric(radicand, sigma), Vec::new())
        }
        NormalPrior::Local { variance } => {
            let radicand = ((variance / s2).ln_1p() - ln_k2) * (1.0 + s2 / variance);
            (MeeResult::found(vec![y], 0.5 * (variance / s2).ln_1p()), symmetric(radicand, sigma), Vec::new())
        }
        NormalPrior::PointShift { shift } => {
            let lo = y + s2 * k.ln() / shift - shift / 2.0;
            let iv = SupportInterval { lo, hi: f64::INFINITY, lo_unbounded: false, hi_unbounded: true };
            let w = Warning::UnboundedEdge { level: k, at: f64::INFINITY, upper_side: true };
            (MeeResult::at_boundary(vec![f64::INFINITY]), vec![iv], vec![w])
        }
    };
    Ok((mee, SupportSet { level: k, intervals, warnings }))
}

/// Log BFF for the partial Bayes factor of `batch` after observing `earlier`:
/// `BF01(batch | earlier; theta0)`. For the normal priors the alternative's
/// posterior after `earlier` is again normal (or a point, for the shift prior).
pub fn partial_log_bff(prior: NormalPrior, earlier: &[NormalSummary], batch: NormalSummary, theta0: f64) -> Result<f64> {
    prior.validate()?;
    let null = normal_log_density_unchecked(batch.y, theta0, batch.var());
    let (mean, variance) = match prior {
        NormalPrior::PointShift { shift } => (theta0 + shift, 0.0),
        NormalPrior::Global { mean, variance } => posterior_params(mean, variance, earlier),
        NormalPrior::Local { variance } => posterior_params(theta0, variance, earlier),
    };
    Ok(null - normal_log_density_unchecked(batch.y, mean, variance + batch.var()))
}

fn posterior_params(mean: f64, variance: f64, data: &[NormalSummary]) -> (f64, f64) {
    let precision = 1.0 / variance + data.iter().map(|d| 1.0 / d.var()).sum::<f64>();
    let weighted = mean / variance + data.iter().map(|d| d.y / d.var()).sum::<f64>();
    (weighted / precision, 1.0 / precision)
}

/// Original and replication effect estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicationPair {
    pub y_o: f64,
    pub sigma_o: f64,
    pub y_r: f64,
    pub sigma_r: f64,
}

impl ReplicationPair {
    pub fn new(y_o: f64, sigma_o: f64, y_r: f64, sigma_r: f64) -> Result<Self> {
        NormalSummary::new(y_o, sigma_o)?;
        NormalSummary::new(y_r, sigma_r)?;
        Ok(Self { y_o, sigma_o, y_r, sigma_r })
    }

    pub fn replication(&self) -> NormalSummary {
        NormalSummary { y: self.y_r, sigma: self.sigma_r }
    }

    /// The original study's result, used as the alternative's prior.
    pub fn prior(&self) -> NormalPrior {
        NormalPrior::Global { mean: self.y_o, variance: self.sigma_o * self.sigma_o }
    }
}

/// BFF of the replication estimate with the original estimate as the prior under the alternative.
pub fn replication_bff(pair: ReplicationPair) -> Result<NormalBff> {
    let pair = ReplicationPair::new(pair.y_o, pair.sigma_o, pair.y_r, pair.sigma_r)?;
    normal_bff(pair.replication(), pair.prior())
}

/// Normal posterior of the effect.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalPosterior {
    pub mean: f64,
    pub variance: f64,
}

impl NormalPosterior {
    pub fn sd(&self) -> f64 {
        self.variance.sqrt()
    }

    /// 95% highest posterior density interval (equal-tailed for a normal).
    pub fn hpd95(&self) -> (f64, f64) {
        let half = 1.959_963_984_540_054 * self.sd();
        (self.mean - half, self.mean + half)
    }

    pub fn density(&self) -> DensityFn {
        let (m, v) = (self.mean, self.variance);
        DensityFn::new(alloc::format!("posterior normal(m={m},v={v})"), vec![Bounds::REAL], move |x: &[f64]| {
            Ok(normal_log_density_unchecked(x[0], m, v))
        })
    }
}

pub fn replication_posterior_params(pair: ReplicationPair) -> Result<NormalPosterior> {
    let pair = ReplicationPair::new(pair.y_o, pair.sigma_o, pair.y_r, pair.sigma_r)?;
    let (mean, variance) = posterior_params(pair.y_o, pair.sigma_o * pair.sigma_o, &[pair.replication()]);
    Ok(NormalPosterior { mean, variance })
}

/// Posterior density of the effect given the replication, with the original study as prior.
pub fn replication_posterior(pair: ReplicationPair) -> Result<DensityFn> {
    replication_posterior_params(pair).map(|p| p.density())
}

/// Log BFF for `Y ~ N(theta, kappa2 / n)` with prior `N(m, v)`, written as in
/// the decomposition that exposes its noncentral chi-squared distribution.
pub fn log_bff_unitvariance(y: f64, theta0: f64, m: f64, v: f64, kappa2: f64, n: u64) -> f64 {
    let nf = n as f64;
    let centre = (theta0 - m) * kappa2 / (nf * v) + theta0;
    0.5 * ((nf * v / kappa2).ln_1p() + (theta0 - m).powi(2) / v
        - (y - centre).powi(2) * v * nf / (kappa2 * (v + kappa2 / nf)))
}

/// Operating characteristics of the unit-variance normal BFF under a true mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdSetup {
    pub theta0: f64,
    /// Data-generating mean.
    pub theta_star: f64,
    pub m: f64,
    pub v: f64,
    pub kappa2: f64,
    pub n: u64,
}

impl ThresholdSetup {
    fn validate(&self) -> Result<()> {
        if !(self.v > 0.0 && self.kappa2 > 0.0 && self.n >= 1) {
            return Err(Error::domain("threshold probability needs v > 0, kappa2 > 0 and n >= 1"));
        }
        if !(self.theta0.is_finite() && self.theta_star.is_finite() && self.m.is_finite()) {
            return Err(Error::domain("threshold probability needs finite theta0, theta_star and m"));
        }
        Ok(())
    }

    fn noncentrality(&self) -> f64 {
        let nf = self.n as f64;
        nf * (self.theta_star - (self.theta0 - self.m) * self.kappa2 / (nf * self.v) - self.theta0).powi(2) / self.kappa2
    }

    fn cutoff(&self, gamma: f64) -> f64 {
        let nf = self.n as f64;
        ((nf * self.v / self.kappa2).ln_1p() + (self.theta0 - self.m).powi(2) / self.v - 2.0 * gamma.ln())
            * (1.0 + self.kappa2 / (self.v * nf))
    }
}

/// `Pr{BF01(Y; theta0) <= gamma | theta_star}`.
pub fn bff_threshold_prob(gamma: f64, setup: &ThresholdSetup) -> Result<f64> {
    setup.validate()?;
    if !(gamma > 0.0) {
        return Err(Error::domain(alloc::format!("threshold must be > 0, got {gamma}")));
    }
    let x = setup.cutoff(gamma);
    if x.is_infinite() {
        return Ok(if x > 0.0 { 0.0 } else { 1.0 });
    }
    if x <= 0.0 {
        // every Y gives BF01 <= gamma
        return Ok(1.0);
    }
    let cdf = noncentral_chisq_cdf(x, 1.0, setup.noncentrality())?;
    Ok((1.0 - cdf).clamp(0.0, 1.0))
}

/// Monte Carlo estimate of [`bff_threshold_prob`] and its standard error.
pub fn bff_threshold_prob_mc(gamma: f64, setup: &ThresholdSetup, draws: usize, seed: u64) -> Result<(f64, f64)> {
    Ok(bff_threshold_cdf_mc(&[gamma], setup, draws, seed)?[0])
}

/// [`bff_threshold_prob_mc`] for several thresholds from one common sample, so
/// the estimates are nondecreasing in `gamma`.
pub fn bff_threshold_cdf_mc(gammas: &[f64], setup: &ThresholdSetup, draws: usize, seed: u64) -> Result<Vec<(f64, f64)>> {
    setup.validate()?;
    if draws == 0 {
        return Err(Error::domain("need at least one draw"));
    }
    if let Some(g) = gammas.iter().find(|g| !(**g > 0.0)) {
        return Err(Error::domain(alloc::format!("threshold must be > 0, got {g}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sd = (setup.kappa2 / setup.n as f64).sqrt();
    let mut log_bf: Vec<f64> = (0..draws)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            let y = setup.theta_star + sd * z;
            log_bff_unitvariance(y, setup.theta0, setup.m, setup.v, setup.kappa2, setup.n)
        })
        .collect();
    log_bf.sort_unstable_by(f64::total_cmp);
    Ok(gammas
        .iter()
        .map(|g| {
            let ln_g = g.ln();
            let hits = log_bf.partition_point(|&b| b <= ln_g);
            let p = hits as f64 / draws as f64;
            (p, (p * (1.0 - p) / draws as f64).sqrt())
        })
        .collect())
}

/// Sample variance `sum (y - ybar)^2 / (n - 1)`: the maximizer of the
/// integrated likelihood of the variance under a flat prior on the mean.
pub fn mil_variance(sample: &[f64]) -> Result<f64> {
    let ss = centred_sum_of_squares(sample)?;
    Ok(ss / (sample.len() - 1) as f64)
}

fn centred_sum_of_squares(sample: &[f64]) -> Result<f64> {
    if sample.len() < 2 {
        return Err(Error::domain("need at least two observations"));
    }
    if sample.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("observations must be finite"));
    }
    let n = sample.len() as f64;
    let mean = sample.iter().sum::<f64>() / n;
    let ss: f64 = sample.iter().map(|v| (v - mean).powi(2)).sum();
    if !(ss > 0.0) {
        return Err(Error::domain("sample has zero variance"));
    }
    Ok(ss)
}

/// `ln p(y | sigma2)` with the mean integrated out under a flat prior.
pub fn integrated_log_lik_variance(sample: &[f64], sigma2: f64) -> Result<f64> {
    if !(sigma2 > 0.0) {
        return Err(Error::domain(alloc::format!("variance must be > 0, got {sigma2}")));
    }
    let ss = centred_sum_of_squares(sample)?;
    let n = sample.len() as f64;
    Ok(-0.5 * (n - 1.0) * (LN_2PI + sigma2.ln()) - 0.5 * n.ln() - ss / (2.0 * sigma2))
}
