//! Adaptive Gauss-Kronrod (G10/K21) quadrature.
//!
//! [`integrate`] is the plain globally-adaptive scheme with infinite-range
//! substitutions. [`log_integrate`] takes a *log* integrand, locates and
//! brackets its peak, subtracts the maximum before exponentiating and returns
//! the log of the integral; it is the workhorse for marginal likelihoods whose
//! integrands live around `exp(-1e5)`.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Ordering;

use num_traits::Float;

use crate::optim;
use crate::{Error, Result};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 0.0,
            rel_tol: 1e-10,
            max_subdivisions: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct LogQuadResult {
    /// `ln` of the integral.
    pub log_value: f64,
    /// Estimated relative error of the integral (absolute error of `log_value`).
    pub rel_error: f64,
    /// The maximum of the log integrand that was factored out.
    pub log_peak: f64,
    pub peak_location: f64,
    pub evaluations: usize,
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk21<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut resg = 0.0;
    let mut resk = WGK[10] * fc;
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * resk;
    let mut resasc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        resasc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let result = resk * half;
    resabs *= half.abs();
    resasc *= half.abs();
    let mut err = ((resk - resg) * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    (result, err)
}

fn adaptive<F: FnMut(f64) -> f64>(
    mut f: F,
    breakpoints: &[f64],
    opts: &QuadOptions,
) -> Result<QuadResult> {
    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    let mut total_err = 0.0;
    // scale for the roundoff floor on cancelling integrands
    let mut total_abs = 0.0;
    let mut evaluations = 0;
    for w in breakpoints.windows(2) {
        let (a, b) = (w[0], w[1]);
        if !(b > a) {
            continue;
        }
        let (value, error) = gk21(&mut f, a, b);
        evaluations += 21;
        total += value;
        total_abs += value.abs();
        total_err += error;
        heap.push(Segment { a, b, value, error });
    }
    let mut subdivisions = heap.len();
    loop {
        if !total.is_finite() || total_err.is_nan() {
            return Err(Error::numerical("quadrature", "integrand produced a non-finite value"));
        }
        let roundoff = 100.0 * f64::EPSILON * total_abs;
        if total_err <= opts.abs_tol.max(opts.rel_tol * total.abs()).max(roundoff) {
            break;
        }
        if subdivisions >= opts.max_subdivisions {
            return Err(Error::numerical(
                "quadrature",
                alloc::format!(
                    "no convergence after {subdivisions} subdivisions; achieved abs error {total_err:e} on value {total:e}"
                ),
            ));
        }
        let worst = match heap.pop() {
            Some(s) => s,
            None => break,
        };
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // interval cannot be split further in floating point
            heap.push(Segment { error: 0.0, ..worst });
            total_err -= worst.error;
            continue;
        }
        let (v1, e1) = gk21(&mut f, worst.a, mid);
        let (v2, e2) = gk21(&mut f, mid, worst.b);
        evaluations += 42;
        subdivisions += 1;
        total += v1 + v2 - worst.value;
        total_abs += v1.abs() + v2.abs() - worst.value.abs();
        total_err += e1 + e2 - worst.error;
        heap.push(Segment { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: worst.b, value: v2, error: e2 });
    }
    // re-sum to shed accumulated rounding from the running updates
    let value: f64 = heap.iter().map(|s| s.value).sum();
    let abs_error: f64 = heap.iter().map(|s| s.error).sum();
    Ok(QuadResult { value, abs_error, evaluations })
}

/// Integrate `f` over `[a, b]`; either bound may be infinite.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    opts: &QuadOptions,
) -> Result<QuadResult> {
    if a.is_nan() || b.is_nan() || !(a < b) {
        return Err(Error::domain(alloc::format!("integration needs a < b, got [{a}, {b}]")));
    }
    match (a.is_finite(), b.is_finite()) {
        (true, true) => adaptive(f, &[a, b], opts),
        (true, false) => adaptive(
            |t| {
                let s = 1.0 - t;
                if s <= 0.0 {
                    return 0.0;
                }
                f(a + t / s) / (s * s)
            },
            &[0.0, 1.0],
            opts,
        ),
        (false, true) => adaptive(
            |t| {
                if t <= 0.0 {
                    return 0.0;
                }
                f(b - (1.0 - t) / t) / (t * t)
            },
            &[0.0, 1.0],
            opts,
        ),
        (false, false) => adaptive(
            |t| {
                let s = 1.0 - t * t;
                if s <= 0.0 {
                    return 0.0;
                }
                f(t / s) * (1.0 + t * t) / (s * s)
            },
            &[-1.0, 0.0, 1.0],
            opts,
        ),
    }
}

/// Integrate `f` over `[points[0], points[last]]` with the given interior breakpoints.
pub fn integrate_with_breakpoints<F: FnMut(f64) -> f64>(
    f: F,
    points: &[f64],
    opts: &QuadOptions,
) -> Result<QuadResult> {
    if points.len() < 2 || points.iter().any(|p| !p.is_finite()) {
        return Err(Error::domain("breakpoints must be at least two finite values"));
    }
    if points.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(Error::domain("breakpoints must be nondecreasing"));
    }
    adaptive(f, points, opts)
}

const SCAN_POINTS: usize = 65;
/// Local maxima of the scan within this many log units of the peak get their
/// own breakpoints.
const SECONDARY_PEAK_WINDOW: f64 = 30.0;

/// `ln integral_a^b exp(log_f(x)) dx` over a finite interval.
///
/// The peak of `log_f` is located by a scan plus golden-section refinement,
/// its width by outward doubling until the integrand has dropped by `e^-2`;
/// breakpoints are placed geometrically around it so that arbitrarily narrow
/// peaks are resolved.
pub fn log_integrate<F: FnMut(f64) -> f64>(
    mut log_f: F,
    a: f64,
    b: f64,
    opts: &QuadOptions,
) -> Result<LogQuadResult> {
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::domain(alloc::format!(
            "log-space integration needs a finite interval, got [{a}, {b}]"
        )));
    }
    let mut evaluations = 0usize;
    let step = (b - a) / SCAN_POINTS as f64;
    let mut xs = [0.0; SCAN_POINTS];
    let mut ys = [f64::NEG_INFINITY; SCAN_POINTS];
    let mut best = 0;
    for i in 0..SCAN_POINTS {
        xs[i] = a + (i as f64 + 0.5) * step;
        let v = log_f(xs[i]);
        ys[i] = if v.is_nan() { f64::NEG_INFINITY } else { v };
        if ys[i] > ys[best] {
            best = i;
        }
    }
    evaluations += SCAN_POINTS;
    if ys[best] == f64::INFINITY {
        return Err(Error::numerical("log_integrate", "log integrand is +infinity"));
    }
    if ys[best] == f64::NEG_INFINITY {
        return Ok(LogQuadResult {
            log_value: f64::NEG_INFINITY,
            rel_error: 0.0,
            log_peak: f64::NEG_INFINITY,
            peak_location: xs[best],
            evaluations,
        });
    }

    let mut peaks: Vec<(f64, f64)> = Vec::new();
    let mut peak_x = xs[best];
    let mut peak_y = ys[best];
    {
        let lo = if best == 0 { a } else { xs[best - 1] };
        let hi = if best + 1 == SCAN_POINTS { b } else { xs[best + 1] };
        let mut count = 0usize;
        let (x, y) = optim::golden_section_max(
            |x| {
                count += 1;
                let v = log_f(x);
                if v.is_nan() { f64::NEG_INFINITY } else { v }
            },
            lo,
            hi,
            1e-14 * (b - a).max(1e-300),
            200,
        );
        evaluations += count;
        if y > peak_y {
            peak_x = x;
            peak_y = y;
        }
    }
    peaks.push((peak_x, step));
    for i in 0..SCAN_POINTS {
        if i == best || ys[i] < peak_y - SECONDARY_PEAK_WINDOW {
            continue;
        }
        let left = if i == 0 { f64::NEG_INFINITY } else { ys[i - 1] };
        let right = if i + 1 == SCAN_POINTS { f64::NEG_INFINITY } else { ys[i + 1] };
        if ys[i] >= left && ys[i] >= right {
            peaks.push((xs[i], step));
        }
    }

    let mut points: Vec<f64> = Vec::with_capacity(64);
    points.push(a);
    points.push(b);
    for (k, &(center, _)) in peaks.iter().enumerate() {
        points.push(center);
        let target = if k == 0 { peak_y - 2.0 } else { f64::NEG_INFINITY };
        for dir in [-1.0f64, 1.0] {
            let width = if k == 0 {
                let (w, n) = drop_width(&mut log_f, center, dir, target, a, b);
                evaluations += n;
                w
            } else {
                step
            };
            let mut d = 0.25 * width;
            for _ in 0..80 {
                let x = center + dir * d;
                if x <= a || x >= b {
                    break;
                }
                points.push(x);
                d *= 2.0;
            }
        }
    }
    points.sort_by(|x, y| x.total_cmp(y));
    points.dedup();

    let mut count = 0usize;
    let q = adaptive(
        |x| {
            count += 1;
            let v = log_f(x) - peak_y;
            if v.is_nan() { 0.0 } else { v.exp() }
        },
        &points,
        opts,
    )?;
    evaluations += count;
    if !(q.value > 0.0) {
        return Err(Error::numerical("log_integrate", "integral of the rescaled integrand is not positive"));
    }
    Ok(LogQuadResult {
        log_value: peak_y + q.value.ln(),
        rel_error: q.abs_error / q.value,
        log_peak: peak_y,
        peak_location: peak_x,
        evaluations,
    })
}

/// Distance from `center` in direction `dir` at which `log_f` first drops
/// below `target`, to within a factor of two.
fn drop_width<F: FnMut(f64) -> f64>(
    log_f: &mut F,
    center: f64,
    dir: f64,
    target: f64,
    a: f64,
    b: f64,
) -> (f64, usize) {
    let span = b - a;
    let limit = if dir < 0.0 { center - a } else { b - center };
    let mut d = span * 1e-12;
    let mut n = 0;
    while d < limit {
        n += 1;
        let v = log_f(center + dir * d);
        if !(v >= target) {
            return (d, n);
        }
        d *= 2.0;
    }
    (limit.max(span * 1e-12), n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let r = integrate(|x| x * x * x - 2.0 * x, 0.0, 2.0, &QuadOptions::default()).unwrap();
        assert!((r.value - 0.0).abs() < 1e-13);
        let r = integrate(|x| x * x, -1.0, 2.0, &QuadOptions::default()).unwrap();
        assert!((r.value - 3.0).abs() < 1e-13);
    }

    #[test]
    fn infinite_ranges() {
        let opts = QuadOptions::default();
        let gauss = |x: f64| (-0.5 * x * x).exp();
        let full = integrate(gauss, f64::NEG_INFINITY, f64::INFINITY, &opts).unwrap();
        let root_2pi = (2.0 * core::f64::consts::PI).sqrt();
        assert!((full.value - root_2pi).abs() < 1e-9);
        let right = integrate(gauss, 0.0, f64::INFINITY, &opts).unwrap();
        assert!((right.value - 0.5 * root_2pi).abs() < 1e-9);
        let left = integrate(|x: f64| x.exp(), f64::NEG_INFINITY, 0.0, &opts).unwrap();
        assert!((left.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_empty_interval() {
        assert!(integrate(|x| x, 1.0, 1.0, &QuadOptions::default()).is_err());
        assert!(log_integrate(|x| x, 0.0, f64::INFINITY, &QuadOptions::default()).is_err());
    }

    #[test]
    fn log_integrate_narrow_peak_far_below_underflow() {
        // exp(-1e5 - (x - 0.7)^2 / (2 * 1e-8)) on [0, 1]
        let sd = 1e-4;
        let r = log_integrate(
            |x| -1e5 - (x - 0.7) * (x - 0.7) / (2.0 * sd * sd),
            0.0,
            1.0,
            &QuadOptions::default(),
        )
        .unwrap();
        let expected = -1e5 + (sd * (2.0 * core::f64::consts::PI).sqrt()).ln();
        assert!((r.log_value - expected).abs() < 1e-9, "{} vs {}", r.log_value, expected);
        assert!((r.peak_location - 0.7).abs() < 1e-8);
    }

    #[test]
    fn log_integrate_all_neg_infinity() {
        let r = log_integrate(|_| f64::NEG_INFINITY, 0.0, 1.0, &QuadOptions::default()).unwrap();
        assert_eq!(r.log_value, f64::NEG_INFINITY);
    }

    #[test]
    fn log_integrate_two_separated_peaks() {
        let sd: f64 = 1e-3;
        let bump = |x: f64, m: f64| -(x - m) * (x - m) / (2.0 * sd * sd);
        let r = log_integrate(
            |x| super::super::specfun::log_add_exp(bump(x, 0.2), bump(x, 0.8)),
            0.0,
            1.0,
            &QuadOptions::default(),
        )
        .unwrap();
        let expected = (2.0 * sd * (2.0 * core::f64::consts::PI).sqrt()).ln();
        assert!((r.log_value - expected).abs() < 1e-8, "{} vs {}", r.log_value, expected);
    }
}
