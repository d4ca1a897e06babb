use alloc::vec::Vec;

use num_traits::Float;

use crate::specfun::LN_SQRT_2PI;
use crate::{Error, Result};

/// Kernels further than this many bandwidths away are ignored.
const CUTOFF: f64 = 9.0;

/// Gaussian kernel density estimate with Silverman's bandwidth, defined
/// only on the range of its sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Kde {
    sorted: Vec<f64>,
    pub bandwidth: f64,
}

impl Kde {
    pub fn new(sample: &[f64]) -> Result<Self> {
        if sample.len() < 2 || sample.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("density estimate needs at least two finite values"));
        }
        let mut sorted = sample.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len() as f64;
        let mean = sorted.iter().sum::<f64>() / n;
        let sd = (sorted.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
        let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
        let bandwidth = 0.9 * spread * n.powf(-0.2);
        if !(bandwidth > 0.0) {
            return Err(Error::domain("density estimate needs a sample with positive spread"));
        }
        Ok(Self { sorted, bandwidth })
    }

    pub fn range(&self) -> (f64, f64) {
        (self.sorted[0], self.sorted[self.sorted.len() - 1])
    }

    pub fn log_density(&self, x: f64) -> Result<f64> {
        let (lo, hi) = self.range();
        if !(x >= lo && x <= hi) {
            return Err(Error::Undefined { at: alloc::vec![x], reason: "outside the range of the posterior sample" });
        }
        let h = self.bandwidth;
        let from = self.sorted.partition_point(|&v| v < x - CUTOFF * h);
        let to = self.sorted.partition_point(|&v| v <= x + CUTOFF * h);
        let sum: f64 = self.sorted[from..to].iter().map(|&v| (-0.5 * ((x - v) / h).powi(2)).exp()).sum();
        Ok(sum.ln() - (self.sorted.len() as f64).ln() - h.ln() - LN_SQRT_2PI)
    }
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}
