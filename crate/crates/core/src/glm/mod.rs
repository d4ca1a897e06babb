//! Logistic regression BFFs for single coefficients.
//!
//! Three routes to `BF01(theta0)` for coefficient `j`: Savage-Dickey with the
//! Laplace (normal) marginal posterior, Savage-Dickey with a kernel density
//! estimate of Metropolis draws, and a normal-mean BFF built from the maximum
//! likelihood estimate and its standard error.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;

use crate::engine::{savage_dickey_bff, BffModel, Bounds, DensityFn, Locality, SavageDickeyBff, Warning};
use crate::linalg::Matrix;
use crate::normal::{normal_bff, NormalBff, NormalPrior, NormalSummary};
use crate::specfun::normal_log_density_unchecked;
use crate::{Error, Result};

mod fit;
mod kde;
mod mcmc;

pub use fit::{fit_map, fit_mle, laplace_marginal_posterior, log_likelihood, log_posterior, MapFit};
pub use kde::Kde;
pub use mcmc::{metropolis_sample, rw_metropolis, McmcOutput};

/// Design matrix with a leading intercept column, and binary outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct GlmDataset {
    pub design: Matrix,
    pub outcome: Vec<bool>,
    /// Coefficient names, `"(Intercept)"` first.
    pub names: Vec<String>,
}

impl GlmDataset {
    /// Prepends the intercept column to `covariates` (one row per observation).
    pub fn new(covariates: &Matrix, outcome: Vec<bool>, covariate_names: Vec<String>) -> Result<Self> {
        let (n, p) = (covariates.rows(), covariates.cols());
        if outcome.len() != n {
            return Err(Error::domain(alloc::format!("{} outcomes for {n} rows", outcome.len())));
        }
        if covariate_names.len() != p {
            return Err(Error::domain(alloc::format!("{} names for {p} covariates", covariate_names.len())));
        }
        if n == 0 {
            return Err(Error::domain("dataset has no rows"));
        }
        let mut data = Vec::with_capacity(n * (p + 1));
        for i in 0..n {
            data.push(1.0);
            data.extend_from_slice(covariates.row(i));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("covariates must be finite"));
        }
        let design = Matrix::from_row_major(n, p + 1, data)?;
        let mut names = vec![String::from("(Intercept)")];
        names.extend(covariate_names);
        let this = Self { design, outcome, names };
        this.check_rank()?;
        Ok(this)
    }

    pub fn n_coefficients(&self) -> usize {
        self.design.cols()
    }

    pub fn n_obs(&self) -> usize {
        self.design.rows()
    }

    pub fn coefficient_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Full column rank of the standardized design (Cholesky of its Gram matrix).
    fn check_rank(&self) -> Result<()> {
        let (n, p) = (self.n_obs(), self.n_coefficients());
        let mut scale = vec![0.0; p];
        for i in 0..n {
            for (j, v) in self.design.row(i).iter().enumerate() {
                scale[j] += v * v;
            }
        }
        if let Some(j) = scale.iter().position(|&s| s == 0.0) {
            return Err(Error::domain(alloc::format!("column '{}' is identically zero", self.names[j])));
        }
        let mut gram = Matrix::zeros(p, p);
        for i in 0..n {
            let row = self.design.row(i);
            for a in 0..p {
                for b in 0..=a {
                    gram[(a, b)] += row[a] * row[b];
                }
            }
        }
        for a in 0..p {
            for b in 0..=a {
                let v = gram[(a, b)] / (scale[a] * scale[b]).sqrt();
                gram[(a, b)] = v;
                gram[(b, a)] = v;
            }
        }
        match gram.cholesky() {
            Ok(c) if c.log_det() > -30.0 => Ok(()),
            _ => Err(Error::domain("design matrix is not of full column rank")),
        }
    }
}

/// Independent normal priors per coefficient; `None` is an improper flat prior.
#[derive(Debug, Clone, PartialEq)]
pub struct GlmPrior {
    pub variances: Vec<Option<f64>>,
}

impl GlmPrior {
    /// Flat prior on the intercept, `N(0, slope_variance)` on every other coefficient.
    pub fn flat_intercept(n_coefficients: usize, slope_variance: f64) -> Result<Self> {
        if !(slope_variance > 0.0 && slope_variance.is_finite()) {
            return Err(Error::domain(alloc::format!("prior variance must be > 0, got {slope_variance}")));
        }
        let mut variances = vec![Some(slope_variance); n_coefficients];
        if let Some(first) = variances.first_mut() {
            *first = None;
        }
        Ok(Self { variances })
    }

    pub fn flat(n_coefficients: usize) -> Self {
        Self { variances: vec![None; n_coefficients] }
    }

    fn check_len(&self, p: usize) -> Result<()> {
        if self.variances.len() != p {
            return Err(Error::domain(alloc::format!("prior has {} entries for {p} coefficients", self.variances.len())));
        }
        if self.variances.iter().flatten().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::domain("prior variances must be > 0"));
        }
        Ok(())
    }

    fn precision(&self, j: usize) -> f64 {
        self.variances[j].map_or(0.0, |v| 1.0 / v)
    }

    /// Sum of the proper components' log densities at `beta` (zero-mean).
    pub fn log_density(&self, beta: &[f64]) -> f64 {
        self.variances
            .iter()
            .zip(beta)
            .filter_map(|(v, &b)| v.map(|v| normal_log_density_unchecked(b, 0.0, v)))
            .sum()
    }

    pub fn marginal(&self, j: usize) -> Result<DensityFn> {
        match self.variances.get(j).copied().flatten() {
            Some(v) => DensityFn::normal(0.0, v),
            None => Ok(DensityFn::new("flat", vec![Bounds::REAL], |_: &[f64]| Ok(0.0)).improper()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GlmMethod {
    Laplace,
    Mcmc { n_samples: usize, seed: u64 },
    UnivariateNormal,
}

#[derive(Debug)]
enum Inner {
    SavageDickey(SavageDickeyBff),
    Normal(NormalBff),
}

/// BFF of one logistic-regression coefficient, on the log-odds scale.
#[derive(Debug)]
pub struct GlmCoefficientBff {
    inner: Inner,
    pub coefficient: String,
    pub method: GlmMethod,
    /// Range where the BFF is defined (the posterior sample range for the KDE path).
    pub support: Option<(f64, f64)>,
    pub warnings: Vec<Warning>,
}

impl BffModel for GlmCoefficientBff {
    fn log_bff(&self, theta0: &[f64]) -> Result<f64> {
        match &self.inner {
            Inner::SavageDickey(m) => m.log_bff(theta0),
            Inner::Normal(m) => m.log_bff(theta0),
        }
    }

    fn domain(&self) -> Vec<Bounds> {
        vec![Bounds::REAL]
    }

    fn descriptor(&self) -> String {
        let method = match self.method {
            GlmMethod::Laplace => "laplace",
            GlmMethod::Mcmc { .. } => "mcmc",
            GlmMethod::UnivariateNormal => "univariate-normal",
        };
        let inner = match &self.inner {
            Inner::SavageDickey(m) => m.descriptor(),
            Inner::Normal(m) => m.descriptor(),
        };
        alloc::format!("logistic coefficient '{}' ({method}) {inner}", self.coefficient)
    }

    fn locality(&self) -> Locality {
        Locality::Global
    }
}

/// BFF for coefficient `j`. The prior on `j` must be proper.
pub fn glm_coefficient_bff(data: &GlmDataset, prior: &GlmPrior, j: usize, method: GlmMethod) -> Result<GlmCoefficientBff> {
    prior.check_len(data.n_coefficients())?;
    if j >= data.n_coefficients() {
        return Err(Error::domain(alloc::format!("coefficient index {j} out of range")));
    }
    let Some(variance) = prior.variances[j] else {
        return Err(Error::Contract(alloc::format!(
            "coefficient '{}' has a flat prior; its BFF is not defined",
            data.names[j]
        )));
    };
    let coefficient = data.names[j].clone();
    let (inner, support, warnings) = match method {
        GlmMethod::Laplace => {
            let fit = fit_map(data, prior)?;
            let post = laplace_marginal_posterior(&fit, j)?;
            (Inner::SavageDickey(savage_dickey_bff(post, prior.marginal(j)?)?), None, Vec::new())
        }
        GlmMethod::Mcmc { n_samples, seed } => {
            let out = metropolis_sample(data, prior, n_samples, seed)?;
            let kde = Kde::new(&out.column(j))?;
            let range = kde.range();
            let post = DensityFn::new(alloc::format!("kde of coefficient {j}"), vec![Bounds::REAL], move |x: &[f64]| {
                kde.log_density(x[0])
            });
            (Inner::SavageDickey(savage_dickey_bff(post, prior.marginal(j)?)?), Some(range), out.warnings)
        }
        GlmMethod::UnivariateNormal => {
            let mle = fit_mle(data)?;
            let se = mle.std_errors()?[j];
            let summary = NormalSummary::new(mle.mode[j], se)?;
            (Inner::Normal(normal_bff(summary, NormalPrior::Global { mean: 0.0, variance })?), None, Vec::new())
        }
    };
    Ok(GlmCoefficientBff { inner, coefficient, method, support, warnings })
}
