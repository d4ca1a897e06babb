//! Maximum evidence estimates and support sets.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;

use super::{BffModel, Bounds, GridSpec, Warning};
use crate::optim::{bisect, golden_section_max, nelder_mead_max};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MeeResult {
    pub exists: bool,
    pub theta_hat: Option<Vec<f64>>,
    /// `ln k_ME`.
    pub log_k_me: Option<f64>,
    /// The maximizer ran into the search boundary while the BFF was still increasing.
    pub boundary_flag: bool,
    /// Where the search stopped when `boundary_flag` is set.
    pub boundary_point: Option<Vec<f64>>,
    pub warnings: Vec<Warning>,
}

impl MeeResult {
    pub fn k_me(&self) -> Option<f64> {
        self.log_k_me.map(f64::exp)
    }

    pub(crate) fn found(theta_hat: Vec<f64>, log_k_me: f64) -> Self {
        Self {
            exists: true,
            theta_hat: Some(theta_hat),
            log_k_me: Some(log_k_me),
            boundary_flag: false,
            boundary_point: None,
            warnings: Vec::new(),
        }
    }

    pub(crate) fn at_boundary(point: Vec<f64>) -> Self {
        Self {
            exists: false,
            theta_hat: None,
            log_k_me: None,
            boundary_flag: true,
            warnings: vec![Warning::BoundaryMaximum { at: point.clone() }],
            boundary_point: Some(point),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportInterval {
    pub lo: f64,
    pub hi: f64,
    /// The set continues below `lo`, beyond the search window.
    pub lo_unbounded: bool,
    /// The set continues above `hi`, beyond the search window.
    pub hi_unbounded: bool,
}

impl SupportInterval {
    pub fn contains(&self, x: f64) -> bool {
        (self.lo_unbounded || x >= self.lo) && (self.hi_unbounded || x <= self.hi)
    }
}

/// `{theta0 : BF01(theta0) >= k}` as sorted, disjoint intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportSet {
    pub level: f64,
    pub intervals: Vec<SupportInterval>,
    pub warnings: Vec<Warning>,
}

impl SupportSet {
    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.intervals.iter().any(|iv| iv.contains(x))
    }

    /// For `k < 1`, the coverage `1 - k` of the conservative confidence set
    /// implied by the universal bound.
    pub fn conservative_confidence(&self) -> Option<f64> {
        (self.level < 1.0).then_some(1.0 - self.level)
    }
}

/// Evaluates a 1D model, turning "undefined" into `None` and keeping the first
/// hard failure for later so the value can be used inside scalar optimizers.
struct Probe<'a, M: ?Sized> {
    model: &'a M,
    failure: Option<Error>,
}

impl<'a, M: BffModel + ?Sized> Probe<'a, M> {
    fn new(model: &'a M) -> Self {
        Self { model, failure: None }
    }

    fn eval(&mut self, x: &[f64]) -> Option<f64> {
        match self.model.log_bff(x) {
            Ok(v) if v.is_nan() => {
                self.fail(Error::numerical("log_bff", "NaN").at(x));
                None
            }
            Ok(v) => Some(v),
            Err(e) if e.is_undefined() => None,
            Err(e) => {
                self.fail(e.at(x));
                None
            }
        }
    }

    /// Value for maximization: undefined counts as `-inf`.
    fn score(&mut self, x: &[f64]) -> f64 {
        self.eval(x).unwrap_or(f64::NEG_INFINITY)
    }

    fn fail(&mut self, e: Error) {
        if self.failure.is_none() {
            self.failure = Some(e);
        }
    }

    fn check(&mut self) -> Result<()> {
        match self.failure.take() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }
}

fn better(a: Option<f64>, b: Option<f64>) -> bool {
    match (a, b) {
        (Some(a), Some(b)) => a > b,
        (Some(_), None) => true,
        _ => false,
    }
}

/// Is the search bound also a hard limit of the model's domain?
fn is_domain_limit(x: f64, bounds: &Bounds) -> bool {
    x == bounds.lower || x == bounds.upper
}

/// Maximum evidence estimate: the maximizer of the BFF over the search window.
///
/// In 1D the grid is scanned and every local maximum is refined by
/// golden-section search on its two neighbouring cells; in 2D the best grid
/// points are polished with Nelder-Mead. A maximizer that runs into a search
/// boundary while the BFF is still increasing means the MEE does not exist in
/// the window. Maxima on a finite edge of the model's domain (e.g. `tau0 = 0`)
/// are genuine.
pub fn find_mee<M: BffModel + ?Sized>(model: &M, search: &GridSpec) -> Result<MeeResult> {
    let domain = model.domain();
    search.check_within(&domain)?;
    match search.dim() {
        1 => mee_1d(model, search, &domain[0]),
        2 => mee_2d(model, search, &domain),
        d => Err(Error::domain(alloc::format!("MEE search supports 1 or 2 dimensions, not {d}"))),
    }
}

fn mee_1d<M: BffModel + ?Sized>(model: &M, search: &GridSpec, bounds: &Bounds) -> Result<MeeResult> {
    let xs = search.axis(0);
    let n = xs.len();
    let (lo, hi) = (search.lower[0], search.upper[0]);
    let tol = 1e-10 * (hi - lo);
    let mut probe = Probe::new(model);
    let vals: Vec<Option<f64>> = xs.iter().map(|&x| probe.eval(&[x])).collect();
    probe.check()?;
    if vals.iter().all(Option::is_none) {
        return Err(Error::numerical("find_mee", "BFF is undefined on the whole search grid"));
    }

    let mut best: Option<(f64, f64, usize)> = None;
    for i in 0..n {
        let v = match vals[i] {
            Some(v) => v,
            None => continue,
        };
        let left_ok = i == 0 || !better(vals[i - 1], Some(v));
        let right_ok = i + 1 == n || !better(vals[i + 1], Some(v));
        if !(left_ok && right_ok) {
            continue;
        }
        let a = xs[i.saturating_sub(1)];
        let b = xs[(i + 1).min(n - 1)];
        let (x, fx) = golden_section_max(|t| probe.score(&[t]), a, b, tol, 200);
        probe.check()?;
        let (x, fx) = if fx >= v { (x, fx) } else { (xs[i], v) };
        if best.is_none_or(|(_, bv, _)| fx > bv) {
            best = Some((x, fx, i));
        }
    }
    let (x, fx, i) = best.expect("at least one defined grid value has a local maximum");

    let increasing_into_lower = i == 0 && n > 1 && better(vals[0], vals[1]);
    let increasing_into_upper = i == n - 1 && n > 1 && better(vals[n - 1], vals[n - 2]);
    let at_lower = (x - lo).abs() <= search.step(0) && increasing_into_lower;
    let at_upper = (hi - x).abs() <= search.step(0) && increasing_into_upper;
    if (at_lower && !is_domain_limit(lo, bounds)) || (at_upper && !is_domain_limit(hi, bounds)) {
        let edge = if at_lower { lo } else { hi };
        return Ok(MeeResult::at_boundary(vec![edge]));
    }
    Ok(MeeResult::found(vec![x], fx))
}

fn mee_2d<M: BffModel + ?Sized>(model: &M, search: &GridSpec, domain: &[Bounds]) -> Result<MeeResult> {
    let n = search.points_per_dim;
    let axes = [search.axis(0), search.axis(1)];
    let mut probe = Probe::new(model);
    let mut vals = vec![None; n * n];
    for i in 0..n {
        for j in 0..n {
            vals[i * n + j] = probe.eval(&[axes[0][i], axes[1][j]]);
        }
    }
    probe.check()?;

    // local maxima over the 8-neighbourhood, best first
    let mut starts: Vec<(usize, usize, f64)> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let Some(v) = vals[i * n + j] else { continue };
            let mut is_max = true;
            for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    let (a, b) = (i as i64 + di, j as i64 + dj);
                    if (di, dj) == (0, 0) || a < 0 || b < 0 || a >= n as i64 || b >= n as i64 {
                        continue;
                    }
                    if better(vals[a as usize * n + b as usize], Some(v)) {
                        is_max = false;
                    }
                }
            }
            if is_max {
                starts.push((i, j, v));
            }
        }
    }
    if starts.is_empty() {
        return Err(Error::numerical("find_mee", "BFF is undefined on the whole search grid"));
    }
    starts.sort_by(|a, b| b.2.total_cmp(&a.2));
    starts.truncate(5);

    let steps = [search.step(0), search.step(1)];
    let mut best: Option<(Vec<f64>, f64)> = None;
    for &(i, j, v) in &starts {
        let x0 = [axes[0][i], axes[1][j]];
        let r = nelder_mead_max(
            |p: &[f64]| probe.score(p),
            &x0,
            &[0.5 * steps[0], 0.5 * steps[1]],
            &search.lower,
            &search.upper,
            1e-13,
            4000,
        );
        probe.check()?;
        let (x, fx) = if r.value >= v { (r.x, r.value) } else { (x0.to_vec(), v) };
        if best.as_ref().is_none_or(|(_, bv)| fx > *bv) {
            best = Some((x, fx));
        }
    }
    let (x, fx) = best.expect("non-empty start list");

    for d in 0..2 {
        let range = search.upper[d] - search.lower[d];
        let near = |edge: f64| (x[d] - edge).abs() <= 1e-6 * range;
        for edge in [search.lower[d], search.upper[d]] {
            if near(edge) && !is_domain_limit(edge, &domain[d]) {
                // still increasing towards the edge?
                let mut inner = x.clone();
                inner[d] = if edge == search.lower[d] { edge + steps[d] } else { edge - steps[d] };
                let inside = probe.score(&inner);
                probe.check()?;
                if fx > inside {
                    return Ok(MeeResult::at_boundary(x));
                }
            }
        }
    }
    Ok(MeeResult::found(x, fx))
}

/// `k` support set of a 1D BFF: the set of `theta0` with `BF01 >= k`.
///
/// Sign changes of `ln BF01 - ln k` on the grid are bisected to
/// `1e-10 * range`. Local extrema of the grid values are refined first, so that
/// a cut close to `k_ME` is not lost between two grid points. An interval that
/// is still above `k` at a search boundary is reported open-ended with a
/// warning, unless that boundary is a hard limit of the model's domain.
pub fn support_set<M: BffModel + ?Sized>(model: &M, k: f64, search: &GridSpec) -> Result<SupportSet> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::domain(alloc::format!("support level k must be positive and finite, got {k}")));
    }
    let domain = model.domain();
    search.check_within(&domain)?;
    if search.dim() != 1 {
        return Err(Error::domain("support sets are one-dimensional; use support_region_2d"));
    }
    let bounds = domain[0];
    let log_k = k.ln();
    let (lo, hi) = (search.lower[0], search.upper[0]);
    let tol = 1e-10 * (hi - lo);
    let mut probe = Probe::new(model);
    let xs = search.axis(0);
    let vals: Vec<Option<f64>> = xs.iter().map(|&x| probe.eval(&[x]).map(|v| v - log_k)).collect();
    probe.check()?;

    let mut pts: Vec<(f64, Option<f64>)> = xs.iter().copied().zip(vals.iter().copied()).collect();
    let n = xs.len();
    for i in 1..n - 1 {
        let (Some(l), Some(c), Some(r)) = (vals[i - 1], vals[i], vals[i + 1]) else { continue };
        let (x, v) = if c >= l && c >= r && c < 0.0 {
            golden_section_max(|t| probe.score(&[t]) - log_k, xs[i - 1], xs[i + 1], tol, 200)
        } else if c <= l && c <= r && c >= 0.0 {
            let (x, v) = golden_section_max(|t| -(probe.score(&[t]) - log_k), xs[i - 1], xs[i + 1], tol, 200);
            (x, -v)
        } else {
            continue;
        };
        probe.check()?;
        if v.is_finite() && (v >= 0.0) != (c >= 0.0) {
            pts.push((x, Some(v)));
        }
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts.dedup_by(|a, b| a.0 == b.0);

    let mut intervals = Vec::new();
    let mut warnings = Vec::new();
    let mut open: Option<(f64, bool)> = None;
    let mut prev: Option<(f64, Option<f64>)> = None;
    for &(x, v) in &pts {
        let inside = v.is_some_and(|v| v >= 0.0);
        match (prev, open) {
            (None, _) => {
                if inside {
                    let unbounded = !is_domain_limit(x, &bounds);
                    if unbounded {
                        warnings.push(Warning::UnboundedEdge { level: k, at: x, upper_side: false });
                    }
                    open = Some((x, unbounded));
                }
            }
            (Some((px, pv)), Some((start, start_unb))) if !inside => {
                let end = match (pv, v) {
                    (Some(pv), Some(_)) => {
                        let r = bisect(|t| probe.score(&[t]) - log_k, px, x, pv, tol);
                        probe.check()?;
                        r
                    }
                    _ => {
                        warnings.push(Warning::TruncatedInterval { level: k, at: px });
                        px
                    }
                };
                intervals.push(SupportInterval { lo: start, hi: end, lo_unbounded: start_unb, hi_unbounded: false });
                open = None;
            }
            (Some((px, pv)), None) if inside => {
                let start = match pv {
                    Some(pv) => {
                        let r = bisect(|t| probe.score(&[t]) - log_k, px, x, pv, tol);
                        probe.check()?;
                        r
                    }
                    None => {
                        warnings.push(Warning::TruncatedInterval { level: k, at: x });
                        x
                    }
                };
                open = Some((start, false));
            }
            _ => {}
        }
        prev = Some((x, v));
    }
    if let Some((start, start_unb)) = open {
        let unbounded = !is_domain_limit(hi, &bounds);
        if unbounded {
            warnings.push(Warning::UnboundedEdge { level: k, at: hi, upper_side: true });
        }
        intervals.push(SupportInterval { lo: start, hi, lo_unbounded: start_unb, hi_unbounded: unbounded });
    }
    Ok(SupportSet { level: k, intervals, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::FnModel;

    fn parabola(center: f64, height: f64) -> impl BffModel {
        FnModel::new("parabola", vec![Bounds::REAL], move |t: &[f64]| Ok(height - (t[0] - center).powi(2)))
    }

    #[test]
    fn mee_of_parabola() {
        let m = parabola(0.123456789, 1.5);
        let r = find_mee(&m, &GridSpec::one_d(-1.0, 1.0, 64).unwrap()).unwrap();
        assert!(r.exists);
        assert!((r.theta_hat.unwrap()[0] - 0.123456789).abs() < 1e-8);
        assert!((r.log_k_me.unwrap() - 1.5).abs() < 1e-14);
    }

    #[test]
    fn mee_picks_global_of_two_peaks() {
        let m = FnModel::new("two", vec![Bounds::REAL], |t: &[f64]| {
            let x = t[0];
            Ok((-(x + 0.5).powi(2) * 50.0).exp() + 1.2 * (-(x - 0.6).powi(2) * 50.0).exp())
        });
        let r = find_mee(&m, &GridSpec::one_d(-1.0, 1.0, 101).unwrap()).unwrap();
        assert!((r.theta_hat.unwrap()[0] - 0.6).abs() < 1e-3);
    }

    #[test]
    fn monotone_bff_has_no_mee() {
        let m = FnModel::new("line", vec![Bounds::REAL], |t: &[f64]| Ok(2.0 * t[0]));
        let r = find_mee(&m, &GridSpec::one_d(-1.0, 1.0, 20).unwrap()).unwrap();
        assert!(!r.exists && r.boundary_flag);
        assert_eq!(r.boundary_point, Some(vec![1.0]));
        assert!(r.theta_hat.is_none() && r.k_me().is_none());
    }

    #[test]
    fn maximum_on_domain_limit_is_genuine() {
        let m = FnModel::new("decay", vec![Bounds::NONNEGATIVE], |t: &[f64]| Ok(-t[0]));
        let r = find_mee(&m, &GridSpec::one_d(0.0, 1.0, 20).unwrap()).unwrap();
        assert!(r.exists);
        assert_eq!(r.theta_hat.unwrap()[0], 0.0);
    }

    #[test]
    fn support_of_parabola() {
        let m = parabola(0.0, 1.0);
        // ln BF >= ln k  <=>  x^2 <= 1 - ln k
        let k = 1.5f64;
        let half = (1.0 - k.ln()).sqrt();
        let s = support_set(&m, k, &GridSpec::one_d(-3.0, 3.0, 50).unwrap()).unwrap();
        assert_eq!(s.intervals.len(), 1);
        assert!((s.intervals[0].lo + half).abs() < 1e-8);
        assert!((s.intervals[0].hi - half).abs() < 1e-8);
        assert!(s.warnings.is_empty());
    }

    #[test]
    fn cut_just_below_peak_between_grid_points() {
        let m = parabola(0.05, 0.0);
        let k = (-1e-6f64).exp();
        let s = support_set(&m, k, &GridSpec::one_d(-1.0, 1.0, 11).unwrap()).unwrap();
        assert_eq!(s.intervals.len(), 1);
        assert!((s.intervals[0].lo - (0.05 - 1e-3)).abs() < 1e-8);
        assert!((s.intervals[0].hi - (0.05 + 1e-3)).abs() < 1e-8);
    }

    #[test]
    fn above_peak_is_empty() {
        let m = parabola(0.0, 1.0);
        let s = support_set(&m, 3.0, &GridSpec::one_d(-1.0, 1.0, 50).unwrap()).unwrap();
        assert!(s.is_empty());
    }

    #[test]
    fn open_edge_is_flagged() {
        let m = FnModel::new("line", vec![Bounds::REAL], |t: &[f64]| Ok(t[0]));
        let s = support_set(&m, 1.0, &GridSpec::one_d(-1.0, 1.0, 20).unwrap()).unwrap();
        assert_eq!(s.intervals.len(), 1);
        let iv = s.intervals[0];
        assert!(iv.lo.abs() < 1e-9 && iv.hi == 1.0 && iv.hi_unbounded && !iv.lo_unbounded);
        assert!(matches!(s.warnings[0], Warning::UnboundedEdge { upper_side: true, .. }));
        assert_eq!(s.conservative_confidence(), None);
    }

    #[test]
    fn two_intervals() {
        let m = FnModel::new("cos", vec![Bounds::REAL], |t: &[f64]| Ok((3.0 * t[0]).cos()));
        let s = support_set(&m, 1.0f64.exp().powf(0.5), &GridSpec::one_d(-2.0, 2.0, 200).unwrap()).unwrap();
        // cos(3x) >= 0.5 on [-pi/9, pi/9] and |x| in [5pi/9, 7pi/9]
        assert_eq!(s.intervals.len(), 3);
        let pi = core::f64::consts::PI;
        assert!((s.intervals[1].hi - pi / 9.0).abs() < 1e-8);
        assert!((s.intervals[2].lo - 5.0 * pi / 9.0).abs() < 1e-8);
    }

    #[test]
    fn undefined_region_truncates() {
        let m = FnModel::new("kde", vec![Bounds::REAL], |t: &[f64]| {
            if t[0] > 0.5 {
                Err(Error::Undefined { at: t.to_vec(), reason: "outside sample" })
            } else {
                Ok(1.0 - t[0] * t[0])
            }
        });
        let g = GridSpec::one_d(-2.0, 2.0, 41).unwrap();
        let s = support_set(&m, 1.0, &g).unwrap();
        assert_eq!(s.intervals.len(), 1);
        assert!((s.intervals[0].lo + 1.0).abs() < 1e-8);
        assert!(s.warnings.iter().any(|w| matches!(w, Warning::TruncatedInterval { .. })));
        let r = find_mee(&m, &g).unwrap();
        assert!(r.theta_hat.unwrap()[0].abs() < 1e-8);
    }

    #[test]
    fn mee_2d_quadratic() {
        let m = FnModel::new("bowl", vec![Bounds::REAL, Bounds::NONNEGATIVE], |t: &[f64]| {
            Ok(2.0 - (t[0] - 0.51).powi(2) * 100.0 - (t[1] - 0.016).powi(2) * 1e4 - (t[0] - 0.51) * (t[1] - 0.016) * 10.0)
        });
        let g = GridSpec::new(vec![0.4, 0.0], vec![0.6, 0.05], 41).unwrap();
        let r = find_mee(&m, &g).unwrap();
        let th = r.theta_hat.unwrap();
        assert!((th[0] - 0.51).abs() < 1e-6 && (th[1] - 0.016).abs() < 1e-6, "{th:?}");
        assert!((r.log_k_me.unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn mee_2d_boundary() {
        let m = FnModel::new("ramp", vec![Bounds::REAL, Bounds::REAL], |t: &[f64]| Ok(t[0] - t[1] * t[1]));
        let g = GridSpec::new(vec![-1.0, -1.0], vec![1.0, 1.0], 21).unwrap();
        let r = find_mee(&m, &g).unwrap();
        assert!(!r.exists && r.boundary_flag);
    }
}
