//! Model-agnostic BFF machinery.
//!
//! A model only has to supply `ln BF01(theta0)` and its domain through
//! [`BffModel`]; curves, maximum evidence estimates and support sets are
//! derived here.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::{Error, Result};

mod density;
mod laplace;
mod region;
mod summary;

pub use density::{relative_belief_ratio, savage_dickey_bff, DensityFn, SavageDickeyBff};
pub use laplace::{laplace_log_bff, laplace_terms, LaplaceProblem, LaplaceTerms};
pub use region::{support_region_2d, SupportRegion};
pub use summary::{find_mee, support_set, MeeResult, SupportInterval, SupportSet};

/// Closed interval of admissible values along one axis; either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub lower: f64,
    pub upper: f64,
}

impl Bounds {
    pub const REAL: Bounds = Bounds { lower: f64::NEG_INFINITY, upper: f64::INFINITY };
    pub const NONNEGATIVE: Bounds = Bounds { lower: 0.0, upper: f64::INFINITY };
    pub const UNIT: Bounds = Bounds { lower: 0.0, upper: 1.0 };

    pub fn new(lower: f64, upper: f64) -> Self {
        Self { lower, upper }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lower && x <= self.upper
    }
}

/// Whether a prior under the alternative depends on the tested value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Locality {
    Global,
    Local,
}

/// A Bayes factor function `theta0 -> ln BF01(y; theta0)`.
pub trait BffModel: Sync {
    fn log_bff(&self, theta0: &[f64]) -> Result<f64>;

    /// Per-dimension bounds of `theta0`.
    fn domain(&self) -> Vec<Bounds>;

    fn descriptor(&self) -> String;

    fn dim(&self) -> usize {
        self.domain().len()
    }

    fn locality(&self) -> Locality {
        Locality::Global
    }
}

impl<T: BffModel + ?Sized> BffModel for &T {
    fn log_bff(&self, theta0: &[f64]) -> Result<f64> {
        (**self).log_bff(theta0)
    }
    fn domain(&self) -> Vec<Bounds> {
        (**self).domain()
    }
    fn descriptor(&self) -> String {
        (**self).descriptor()
    }
    fn locality(&self) -> Locality {
        (**self).locality()
    }
}

impl<T: BffModel + ?Sized + Send> BffModel for Box<T> {
    fn log_bff(&self, theta0: &[f64]) -> Result<f64> {
        (**self).log_bff(theta0)
    }
    fn domain(&self) -> Vec<Bounds> {
        (**self).domain()
    }
    fn descriptor(&self) -> String {
        (**self).descriptor()
    }
    fn locality(&self) -> Locality {
        (**self).locality()
    }
}

/// A [`BffModel`] backed by a closure.
pub struct FnModel<F> {
    f: F,
    domain: Vec<Bounds>,
    descriptor: String,
    locality: Locality,
}

impl<F> FnModel<F>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    pub fn new(descriptor: impl Into<String>, domain: Vec<Bounds>, f: F) -> Self {
        Self { f, domain, descriptor: descriptor.into(), locality: Locality::Global }
    }

    pub fn with_locality(mut self, locality: Locality) -> Self {
        self.locality = locality;
        self
    }
}

impl<F> BffModel for FnModel<F>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    fn log_bff(&self, theta0: &[f64]) -> Result<f64> {
        (self.f)(theta0)
    }
    fn domain(&self) -> Vec<Bounds> {
        self.domain.clone()
    }
    fn descriptor(&self) -> String {
        self.descriptor.clone()
    }
    fn locality(&self) -> Locality {
        self.locality
    }
}

/// Rectangular evaluation grid with the same number of points per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub points_per_dim: usize,
}

impl GridSpec {
    pub const DEFAULT_POINTS_1D: usize = 512;
    pub const DEFAULT_POINTS_2D: usize = 101;

    pub fn new(lower: Vec<f64>, upper: Vec<f64>, points_per_dim: usize) -> Result<Self> {
        let g = Self { lower, upper, points_per_dim };
        g.validate()?;
        Ok(g)
    }

    pub fn one_d(lower: f64, upper: f64, points: usize) -> Result<Self> {
        Self::new(alloc::vec![lower], alloc::vec![upper], points)
    }

    /// Grid with the default resolution for its dimension.
    pub fn with_default_points(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let points = if lower.len() >= 2 { Self::DEFAULT_POINTS_2D } else { Self::DEFAULT_POINTS_1D };
        Self::new(lower, upper, points)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    fn validate(&self) -> Result<()> {
        if self.lower.is_empty() || self.lower.len() != self.upper.len() {
            return Err(Error::domain("grid bounds must be non-empty and of equal length"));
        }
        if self.points_per_dim < 3 {
            return Err(Error::domain("grid needs at least 3 points per dimension"));
        }
        for (lo, hi) in self.lower.iter().zip(&self.upper) {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::domain(alloc::format!("grid axis needs finite lower < upper, got [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    /// Errors if the grid is malformed or leaves `domain`.
    pub fn check_within(&self, domain: &[Bounds]) -> Result<()> {
        self.validate()?;
        if domain.len() != self.dim() {
            return Err(Error::domain(alloc::format!(
                "grid has dimension {} but the model has dimension {}",
                self.dim(),
                domain.len()
            )));
        }
        for (i, b) in domain.iter().enumerate() {
            if !(b.contains(self.lower[i]) && b.contains(self.upper[i])) {
                return Err(Error::domain(alloc::format!(
                    "grid axis {i} [{}, {}] leaves the model domain [{}, {}]",
                    self.lower[i], self.upper[i], b.lower, b.upper
                )));
            }
        }
        Ok(())
    }

    pub fn step(&self, axis: usize) -> f64 {
        (self.upper[axis] - self.lower[axis]) / (self.points_per_dim - 1) as f64
    }

    /// Evenly spaced values along one axis, endpoints included.
    pub fn axis(&self, axis: usize) -> Vec<f64> {
        let n = self.points_per_dim;
        let (lo, hi) = (self.lower[axis], self.upper[axis]);
        (0..n)
            .map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
            .collect()
    }

    /// All grid points, first axis slowest.
    pub fn points(&self) -> Vec<Vec<f64>> {
        let axes: Vec<Vec<f64>> = (0..self.dim()).map(|i| self.axis(i)).collect();
        let n = self.points_per_dim;
        let total = n.pow(self.dim() as u32);
        (0..total)
            .map(|mut idx| {
                let mut p = alloc::vec![0.0; self.dim()];
                for d in (0..self.dim()).rev() {
                    p[d] = axes[d][idx % n];
                    idx /= n;
                }
                p
            })
            .collect()
    }
}

/// A BFF sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BffCurve {
    pub grid: GridSpec,
    /// Grid points, in the order of [`GridSpec::points`].
    pub points: Vec<Vec<f64>>,
    /// `ln BF01` at each point; `None` where the BFF is undefined (e.g. the
    /// posterior density estimate has no support there).
    pub log_bf: Vec<Option<f64>>,
    pub descriptor: String,
}

impl BffCurve {
    /// Assemble a curve from per-point results (evaluated in any order).
    /// Undefined points become `None`; any other failure is returned with its location.
    pub fn assemble(
        grid: GridSpec,
        descriptor: String,
        points: Vec<Vec<f64>>,
        results: Vec<Result<f64>>,
    ) -> Result<Self> {
        let mut log_bf = Vec::with_capacity(results.len());
        for (p, r) in points.iter().zip(results) {
            match r {
                Ok(v) => log_bf.push(Some(v)),
                Err(e) if e.is_undefined() => log_bf.push(None),
                Err(e) => return Err(e.at(p)),
            }
        }
        Ok(Self { grid, points, log_bf, descriptor })
    }

    pub fn is_truncated(&self) -> bool {
        self.log_bf.iter().any(Option::is_none)
    }

    /// Range of the first coordinate over which the curve is defined.
    pub fn defined_range(&self) -> Option<(f64, f64)> {
        let mut it = self
            .points
            .iter()
            .zip(&self.log_bf)
            .filter(|(_, v)| v.is_some())
            .map(|(p, _)| p[0]);
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), x| (lo.min(x), hi.max(x))))
    }

    /// Point with the largest defined value.
    pub fn argmax(&self) -> Option<(&[f64], f64)> {
        self.points
            .iter()
            .zip(&self.log_bf)
            .filter_map(|(p, v)| v.map(|v| (p.as_slice(), v)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
    }
}

/// `log_bf[i] = model.log_bff(grid[i])` for every grid point.
pub fn evaluate_curve<M: BffModel + ?Sized>(model: &M, grid: &GridSpec) -> Result<BffCurve> {
    grid.check_within(&model.domain())?;
    let points = grid.points();
    let results = points.iter().map(|p| model.log_bff(p)).collect();
    BffCurve::assemble(grid.clone(), model.descriptor(), points, results)
}

/// Fold of log Bayes factors over data batches:
/// `BF01(y_{1:2}; theta0) = BF01(y_1; theta0) * BF01(y_2 | y_1; theta0)`.
pub fn combine_sequential(log_bf_first: f64, log_bf_partial: f64) -> f64 {
    log_bf_first + log_bf_partial
}

/// Conservative P-value `min(BF01, 1)` implied by the universal bound
/// `Pr(BF01 <= k | H0) <= k`.
pub fn universal_bound_pvalue(bf01: f64) -> Result<f64> {
    if !(bf01 > 0.0) || bf01.is_nan() {
        return Err(Error::domain(alloc::format!("Bayes factor must be positive, got {bf01}")));
    }
    Ok(bf01.min(1.0))
}

/// Conditions that do not stop an analysis but qualify its result.
#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// A support interval is still above its level at the search boundary.
    UnboundedEdge { level: f64, at: f64, upper_side: bool },
    /// The BFF keeps increasing into the search boundary; no MEE in the window.
    BoundaryMaximum { at: Vec<f64> },
    /// The BFF could not be evaluated on part of the grid.
    TruncatedCurve { defined_from: f64, defined_to: f64 },
    /// A support interval ends where the BFF stops being defined.
    TruncatedInterval { level: f64, at: f64 },
    /// Metropolis acceptance rate after burn-in outside [0.05, 0.7].
    AcceptanceRate { rate: f64 },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::UnboundedEdge { level, at, upper_side } => write!(
                f,
                "support set at k={level} is still above k at the {} search boundary {at}; the interval is open-ended",
                if *upper_side { "upper" } else { "lower" }
            ),
            Warning::BoundaryMaximum { at } => write!(
                f,
                "BFF increases into the search boundary at {at:?}; maximum evidence estimate does not exist in this window"
            ),
            Warning::TruncatedCurve { defined_from, defined_to } => write!(
                f,
                "BFF is only defined on [{defined_from}, {defined_to}] of the grid; values outside are not reported"
            ),
            Warning::TruncatedInterval { level, at } => write!(
                f,
                "support set at k={level} ends at {at} where the BFF stops being defined"
            ),
            Warning::AcceptanceRate { rate } => {
                write!(f, "Metropolis acceptance rate {rate:.3} is outside [0.05, 0.7]")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn grid_axis_endpoints_exact() {
        let g = GridSpec::one_d(-0.6, 0.2, 9).unwrap();
        let ax = g.axis(0);
        assert_eq!(ax[0], -0.6);
        assert_eq!(ax[8], 0.2);
        assert!(ax.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::one_d(1.0, 0.0, 10).is_err());
        assert!(GridSpec::one_d(0.0, 1.0, 2).is_err());
        assert!(GridSpec::new(vec![0.0], vec![1.0, 2.0], 5).is_err());
        let g = GridSpec::with_default_points(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(g.points_per_dim, 101);
        assert_eq!(g.points().len(), 101 * 101);
    }

    #[test]
    fn two_d_points_first_axis_slowest() {
        let g = GridSpec::new(vec![0.0, 10.0], vec![2.0, 12.0], 3).unwrap();
        let p = g.points();
        assert_eq!(p[0], vec![0.0, 10.0]);
        assert_eq!(p[1], vec![0.0, 11.0]);
        assert_eq!(p[3], vec![1.0, 10.0]);
    }

    #[test]
    fn single_point_evaluation_matches_direct_call() {
        let m = FnModel::new("parabola", vec![Bounds::REAL], |t: &[f64]| Ok(-(t[0] - 0.3).powi(2)));
        let g = GridSpec::one_d(-1.0, 1.0, 5).unwrap();
        let c = evaluate_curve(&m, &g).unwrap();
        for (p, v) in c.points.iter().zip(&c.log_bf) {
            assert_eq!(v.unwrap(), m.log_bff(p).unwrap());
        }
    }

    #[test]
    fn curve_errors_carry_location() {
        let m = FnModel::new("bad", vec![Bounds::REAL], |t: &[f64]| {
            if t[0] > 0.5 { Err(Error::numerical("test", "boom")) } else { Ok(0.0) }
        });
        let err = evaluate_curve(&m, &GridSpec::one_d(0.0, 1.0, 5).unwrap()).unwrap_err();
        match err {
            Error::AtPoint { at, .. } => assert_eq!(at, vec![0.75]),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn grid_outside_domain_rejected() {
        let m = FnModel::new("unit", vec![Bounds::UNIT], |_: &[f64]| Ok(0.0));
        assert!(evaluate_curve(&m, &GridSpec::one_d(-0.1, 0.5, 5).unwrap()).is_err());
    }

    #[test]
    fn sequential_and_universal_bound() {
        assert_eq!(combine_sequential(0.0, 0.0), 0.0);
        assert_eq!(combine_sequential(-1.5, 0.25), -1.25);
        assert_eq!(universal_bound_pvalue(0.02).unwrap(), 0.02);
        assert_eq!(universal_bound_pvalue(3.0).unwrap(), 1.0);
        assert!(universal_bound_pvalue(0.0).is_err());
    }
}
