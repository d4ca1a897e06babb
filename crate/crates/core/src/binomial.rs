//! BFF for a binomial proportion with a truncated beta prior under the alternative.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;

use crate::engine::{BffModel, Bounds};
use crate::quad::{log_integrate, QuadOptions};
use crate::specfun::{beta_log_density, log_beta, log_gamma, log_trunc_beta_mass};
use crate::{Error, PriorSpec, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BinomialData {
    pub y: u64,
    pub n: u64,
}

impl BinomialData {
    pub fn new(y: u64, n: u64) -> Result<Self> {
        if y > n {
            return Err(Error::domain(alloc::format!("successes {y} exceed trials {n}")));
        }
        Ok(Self { y, n })
    }

    fn failures(&self) -> u64 {
        self.n - self.y
    }
}

/// `Beta(a, b)` truncated to `[l, u]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncBetaPrior {
    pub a: f64,
    pub b: f64,
    pub l: f64,
    pub u: f64,
}

impl TruncBetaPrior {
    pub fn new(a: f64, b: f64, l: f64, u: f64) -> Result<Self> {
        let p = Self { a, b, l, u };
        PriorSpec::from(p).validate()?;
        Ok(p)
    }

    /// `ln{I_u(a, b) - I_l(a, b)}`
    pub fn log_mass(&self) -> Result<f64> {
        log_trunc_beta_mass(self.a, self.b, self.l, self.u)
    }

    /// Log density on `[l, u]`, `-inf` outside.
    pub fn log_density(&self, t: f64) -> Result<f64> {
        if t < self.l || t > self.u {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(beta_log_density(t, self.a, self.b) - self.log_mass()?)
    }
}

impl From<TruncBetaPrior> for PriorSpec {
    fn from(p: TruncBetaPrior) -> Self {
        PriorSpec::TruncBeta { a: p.a, b: p.b, lower: p.l, upper: p.u }
    }
}

impl TryFrom<PriorSpec> for TruncBetaPrior {
    type Error = Error;

    fn try_from(p: PriorSpec) -> Result<Self> {
        match p {
            PriorSpec::TruncBeta { a, b, lower, upper } => TruncBetaPrior::new(a, b, lower, upper),
            other => Err(Error::domain(alloc::format!("'{other}' is not a truncated beta prior"))),
        }
    }
}

/// `x ln t`, with `0 ln 0 = 0`.
fn xlogt(x: f64, t: f64) -> f64 {
    if x == 0.0 { 0.0 } else { x * t.ln() }
}

/// `x ln(1 - t)`, with `0 ln 0 = 0`.
fn xlog1mt(x: f64, t: f64) -> f64 {
    if x == 0.0 { 0.0 } else { x * (-t).ln_1p() }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinomialBff {
    pub data: BinomialData,
    pub prior: TruncBetaPrior,
    /// `-ln p(y | H1)` without the binomial coefficient, which cancels.
    neg_log_marginal: f64,
}

pub fn binomial_bff(data: BinomialData, prior: TruncBetaPrior) -> Result<BinomialBff> {
    let data = BinomialData::new(data.y, data.n)?;
    let prior = TruncBetaPrior::new(prior.a, prior.b, prior.l, prior.u)?;
    let (y, f) = (data.y as f64, data.failures() as f64);
    let (pa, pb) = (prior.a + y, prior.b + f);
    let neg_log_marginal = -(log_beta(pa, pb)? - log_beta(prior.a, prior.b)?)
        + prior.log_mass()?
        - log_trunc_beta_mass(pa, pb, prior.l, prior.u)?;
    Ok(BinomialBff { data, prior, neg_log_marginal })
}

impl BinomialBff {
    pub fn eval(&self, theta0: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&theta0) {
            return Err(Error::domain(alloc::format!("theta0 must lie in [0, 1], got {theta0}")));
        }
        let (y, f) = (self.data.y as f64, self.data.failures() as f64);
        Ok(xlogt(y, theta0) + xlog1mt(f, theta0) + self.neg_log_marginal)
    }

    /// `ln p(y | H1)` including the binomial coefficient.
    pub fn log_marginal_lik(&self) -> Result<f64> {
        Ok(log_binomial_coefficient(self.data)? - self.neg_log_marginal)
    }
}

impl BffModel for BinomialBff {
    fn log_bff(&self, theta0: &[f64]) -> Result<f64> {
        self.eval(theta0[0])
    }

    fn domain(&self) -> Vec<Bounds> {
        vec![Bounds::UNIT]
    }

    fn descriptor(&self) -> String {
        alloc::format!("binomial(y={},n={}) {}", self.data.y, self.data.n, PriorSpec::from(self.prior))
    }
}

fn log_binomial_coefficient(d: BinomialData) -> Result<f64> {
    let (n, y, f) = (d.n as f64, d.y as f64, d.failures() as f64);
    Ok(log_gamma(n + 1.0)? - log_gamma(y + 1.0)? - log_gamma(f + 1.0)?)
}

/// `ln p(y | H1)` by adaptive log-space quadrature of likelihood times prior,
/// with the prior's truncated mass also integrated numerically. An
/// independent check of the closed form.
pub fn binomial_marginal_lik_oracle(data: BinomialData, prior: TruncBetaPrior) -> Result<f64> {
    let data = BinomialData::new(data.y, data.n)?;
    let prior = TruncBetaPrior::new(prior.a, prior.b, prior.l, prior.u)?;
    let (y, f) = (data.y as f64, data.failures() as f64);
    let opts = QuadOptions { rel_tol: 1e-12, ..QuadOptions::default() };
    let joint = log_integrate(
        |t| xlogt(y, t) + xlog1mt(f, t) + beta_log_density(t, prior.a, prior.b),
        prior.l,
        prior.u,
        &opts,
    )?;
    let mass = log_integrate(|t| beta_log_density(t, prior.a, prior.b), prior.l, prior.u, &opts)?;
    Ok(log_binomial_coefficient(data)? + joint.log_value - mass.log_value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coin() -> BinomialBff {
        binomial_bff(BinomialData::new(178_078, 350_757).unwrap(), TruncBetaPrior::new(5100.0, 4900.0, 0.5, 1.0).unwrap())
            .unwrap()
    }

    #[test]
    fn no_data_is_neutral() {
        let m = binomial_bff(BinomialData::new(0, 0).unwrap(), TruncBetaPrior::new(2.0, 3.0, 0.2, 0.7).unwrap()).unwrap();
        for t in [0.0, 0.3, 1.0] {
            assert!(m.eval(t).unwrap().abs() < 1e-14);
        }
    }

    #[test]
    fn edges() {
        let all = binomial_bff(BinomialData::new(5, 5).unwrap(), TruncBetaPrior::new(1.0, 1.0, 0.0, 1.0).unwrap()).unwrap();
        // BF01(1) = 1 / (1/6)
        assert!((all.eval(1.0).unwrap() - 6f64.ln()).abs() < 1e-12);
        assert_eq!(all.eval(0.0).unwrap(), f64::NEG_INFINITY);
        let mixed = binomial_bff(BinomialData::new(2, 5).unwrap(), TruncBetaPrior::new(1.0, 1.0, 0.0, 1.0).unwrap()).unwrap();
        assert_eq!(mixed.eval(0.0).unwrap(), f64::NEG_INFINITY);
        assert_eq!(mixed.eval(1.0).unwrap(), f64::NEG_INFINITY);
        assert!(mixed.eval(1.5).is_err());
    }

    #[test]
    fn coin_at_half() {
        // mpmath reference
        let v = coin().eval(0.5).unwrap();
        assert!((v + 39.680_340_610_611).abs() < 1e-7, "{v}");
    }

    #[test]
    fn closed_form_matches_oracle() {
        let d = BinomialData::new(7, 10).unwrap();
        let p = TruncBetaPrior::new(2.0, 2.0, 0.0, 1.0).unwrap();
        let closed = binomial_bff(d, p).unwrap().log_marginal_lik().unwrap();
        let oracle = binomial_marginal_lik_oracle(d, p).unwrap();
        assert!((closed - oracle).abs() < 1e-8);
        let p = TruncBetaPrior::new(3.0, 1.5, 0.3, 0.55).unwrap();
        let closed = binomial_bff(d, p).unwrap().log_marginal_lik().unwrap();
        assert!((closed - binomial_marginal_lik_oracle(d, p).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn uniform_prior_marginal_is_one_over_n_plus_one() {
        let d = BinomialData::new(3, 9).unwrap();
        let m = binomial_bff(d, TruncBetaPrior::new(1.0, 1.0, 0.0, 1.0).unwrap()).unwrap();
        assert!((m.log_marginal_lik().unwrap() + 10f64.ln()).abs() < 1e-12);
    }
}
