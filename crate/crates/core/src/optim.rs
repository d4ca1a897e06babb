//! Scalar and small-dimensional optimizers and finite differences.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;

use crate::linalg::Matrix;
use crate::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for a maximum of `f` on `[a, b]`.
///
/// Returns the best point seen (which may be an endpoint) and its value.
pub fn golden_section_max<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    tol: f64,
    max_iter: usize,
) -> (f64, f64) {
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut best = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    for _ in 0..max_iter {
        if (hi - lo).abs() <= tol {
            break;
        }
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
            if f1 > best.1 {
                best = (x1, f1);
            }
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
            if f2 > best.1 {
                best = (x2, f2);
            }
        }
    }
    let fa = f(a);
    let fb = f(b);
    if fa > best.1 {
        best = (a, fa);
    }
    if fb > best.1 {
        best = (b, fb);
    }
    best
}

/// Bisection for a sign change of `f` between `a` and `b`.
///
/// `fa` is `f(a)`; only its sign is used. Stops when the bracket is shorter
/// than `tol`.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, fa: f64, tol: f64) -> f64 {
    let (mut lo, mut hi) = (a, b);
    let lo_positive = fa >= 0.0;
    for _ in 0..400 {
        if (hi - lo).abs() <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let fm = f(mid);
        if (fm >= 0.0) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Nelder-Mead maximization of `f`, starting from `x0` with initial simplex
/// edge lengths `steps`. Points outside `[lower, upper]` are clamped.
pub fn nelder_mead_max<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    steps: &[f64],
    lower: &[f64],
    upper: &[f64],
    tol: f64,
    max_iter: usize,
) -> NelderMeadResult {
    let n = x0.len();
    let clamp = |x: &mut [f64]| {
        for i in 0..n {
            x[i] = x[i].clamp(lower[i], upper[i]);
        }
    };
    // minimize g = -f
    let mut eval = |x: &[f64]| {
        let v = -f(x);
        if v.is_nan() { f64::INFINITY } else { v }
    };
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += steps[i];
        if p[i] > upper[i] {
            p[i] = x0[i] - steps[i];
        }
        clamp(&mut p);
        simplex.push(p);
    }
    let mut values: Vec<f64> = simplex.iter().map(|p| eval(p)).collect();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread = (values[n] - values[0]).abs();
        let size = (1..=n)
            .map(|i| {
                simplex[i]
                    .iter()
                    .zip(&simplex[0])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if spread <= tol * (1.0 + values[0].abs()) && size <= tol.sqrt() * 1e-3 {
            converged = true;
            break;
        }

        let mut centroid = vec![0.0; n];
        for p in &simplex[..n] {
            for i in 0..n {
                centroid[i] += p[i] / n as f64;
            }
        }
        let along = |t: f64, worst: &[f64]| -> Vec<f64> {
            let mut p: Vec<f64> = (0..n).map(|i| centroid[i] + t * (worst[i] - centroid[i])).collect();
            clamp(&mut p);
            p
        };
        let reflected = along(-1.0, &simplex[n]);
        let fr = eval(&reflected);
        if fr < values[0] {
            let expanded = along(-2.0, &simplex[n]);
            let fe = eval(&expanded);
            if fe < fr {
                simplex[n] = expanded;
                values[n] = fe;
            } else {
                simplex[n] = reflected;
                values[n] = fr;
            }
        } else if fr < values[n - 1] {
            simplex[n] = reflected;
            values[n] = fr;
        } else {
            let contracted = if fr < values[n] {
                along(-0.5, &simplex[n])
            } else {
                along(0.5, &simplex[n])
            };
            let fc = eval(&contracted);
            if fc < values[n].min(fr) {
                simplex[n] = contracted;
                values[n] = fc;
            } else {
                let best = simplex[0].clone();
                for k in 1..=n {
                    for i in 0..n {
                        simplex[k][i] = best[i] + 0.5 * (simplex[k][i] - best[i]);
                    }
                    values[k] = eval(&simplex[k]);
                }
            }
        }
    }
    let best = (0..=n).min_by(|&i, &j| values[i].total_cmp(&values[j])).unwrap_or(0);
    NelderMeadResult {
        x: simplex[best].clone(),
        value: -values[best],
        iterations,
        converged,
    }
}

/// Central-difference step `eps^(1/3) * (1 + |x|)`.
#[inline]
pub fn fd_step(x: f64) -> f64 {
    f64::EPSILON.cbrt() * (1.0 + x.abs())
}

pub fn fd_gradient<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64]) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|i| {
            let h = fd_step(x[i]);
            p[i] = x[i] + h;
            let up = f(&p);
            p[i] = x[i] - h;
            let down = f(&p);
            p[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Central finite-difference Hessian.
pub fn fd_hessian<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64]) -> Matrix {
    let n = x.len();
    let mut h = Matrix::zeros(n, n);
    let f0 = f(x);
    let mut p = x.to_vec();
    let steps: Vec<f64> = x.iter().map(|&v| fd_step(v)).collect();
    for i in 0..n {
        let hi = steps[i];
        p[i] = x[i] + hi;
        let up = f(&p);
        p[i] = x[i] - hi;
        let down = f(&p);
        p[i] = x[i];
        h[(i, i)] = (up - 2.0 * f0 + down) / (hi * hi);
        for j in 0..i {
            let hj = steps[j];
            let mut corner = |si: f64, sj: f64| {
                p[i] = x[i] + si * hi;
                p[j] = x[j] + sj * hj;
                let v = f(&p);
                p[i] = x[i];
                p[j] = x[j];
                v
            };
            let v = (corner(1.0, 1.0) - corner(1.0, -1.0) - corner(-1.0, 1.0) + corner(-1.0, -1.0))
                / (4.0 * hi * hj);
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    h
}

#[derive(Debug, Clone)]
pub struct AscentResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

/// BFGS ascent on a smooth function with finite-difference gradients.
pub fn bfgs_max<F: Fn(&[f64]) -> f64>(
    f: &F,
    x0: &[f64],
    grad_tol: f64,
    max_iter: usize,
) -> Result<AscentResult> {
    let n = x0.len();
    if n == 0 {
        return Ok(AscentResult { x: Vec::new(), value: f(x0), iterations: 0 });
    }
    let mut x = x0.to_vec();
    let mut fx = f(&x);
    if !fx.is_finite() {
        return Err(Error::numerical("bfgs", "objective is not finite at the starting point"));
    }
    // inverse Hessian approximation of -f
    let mut hinv = Matrix::identity(n);
    let mut g = fd_gradient(f, &x);
    for it in 0..max_iter {
        let gnorm = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if gnorm <= grad_tol * (1.0 + fx.abs()).sqrt() {
            return Ok(AscentResult { x, value: fx, iterations: it });
        }
        // ascent direction d = Hinv * g
        let d = hinv.mul_vec(&g);
        let slope: f64 = d.iter().zip(&g).map(|(a, b)| a * b).sum();
        let (d, slope) = if slope > 0.0 {
            (d, slope)
        } else {
            hinv = Matrix::identity(n);
            let s: f64 = g.iter().map(|v| v * v).sum();
            (g.clone(), s)
        };
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let xn: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + t * b).collect();
            let fxn = f(&xn);
            if fxn.is_finite() && fxn >= fx + 1e-4 * t * slope {
                accepted = Some((xn, fxn));
                break;
            }
            t *= 0.5;
        }
        let (xn, fxn) = match accepted {
            Some(v) => v,
            None => return Ok(AscentResult { x, value: fx, iterations: it }),
        };
        let gn = fd_gradient(f, &xn);
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        // gradient of -f changes by -(gn - g)
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| b - a).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        if sy > 1e-300 {
            let hy = hinv.mul_vec(&y);
            let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
            let rho = 1.0 / sy;
            for i in 0..n {
                for j in 0..n {
                    hinv[(i, j)] += (1.0 + yhy * rho) * rho * s[i] * s[j]
                        - rho * (hy[i] * s[j] + s[i] * hy[j]);
                }
            }
        }
        x = xn;
        fx = fxn;
        g = gn;
    }
    Err(Error::numerical(
        "bfgs",
        alloc::format!("no convergence in {max_iter} iterations"),
    ))
}
