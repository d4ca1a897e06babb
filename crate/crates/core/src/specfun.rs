//! Special functions, evaluated in log space where it matters.
//!
//! The binomial and meta-analysis models push beta parameters to ~1.8e5, so
//! the incomplete beta function is exposed through its log tails and the
//! truncated-beta normalizer has a quadrature fallback for the cases where
//! the direct difference of two regularized values cancels.

use num_traits::Float;

use crate::quad::{self, QuadOptions};
use crate::{Error, Result};

pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
pub const LN_2PI: f64 = 1.837_877_066_409_345_5;
/// `ln(sqrt(2/pi))`
const LN_SQRT_2_OVER_PI: f64 = -0.225_791_352_644_727_43;

const CF_EPS: f64 = 1e-16;
const CF_TINY: f64 = 1e-300;
const CF_MAX_ITER: usize = 200_000;

/// Below this the truncated-beta mass is recomputed by quadrature.
const TRUNC_MASS_UNDERFLOW: f64 = 1e-290;
/// Relative size of `I_u - I_l` w.r.t. the larger term below which the
/// difference is treated as cancelled.
const TRUNC_MASS_CANCELLATION: f64 = 1e-8;

/// Stirling-series correction `ln Gamma(x) - [(x - 1/2) ln x - x + ln sqrt(2 pi)]`
/// for `x >= 10`.
fn stirling_correction(x: f64) -> f64 {
    // B_{2k} / (2k (2k - 1)), k = 1..8
    const C: [f64; 8] = [
        1.0 / 12.0,
        -1.0 / 360.0,
        1.0 / 1260.0,
        -1.0 / 1680.0,
        1.0 / 1188.0,
        -691.0 / 360_360.0,
        1.0 / 156.0,
        -3617.0 / 122_400.0,
    ];
    let z = 1.0 / x;
    let z2 = z * z;
    let mut s = C[7];
    for c in C[..7].iter().rev() {
        s = s * z2 + c;
    }
    s * z
}

pub(crate) fn ln_gamma_unchecked(x: f64) -> f64 {
    if x >= 10.0 {
        return (x - 0.5) * x.ln() - x + LN_SQRT_2PI + stirling_correction(x);
    }
    // shift into the asymptotic range: Gamma(x) = Gamma(x + m) / (x (x+1) ... (x+m-1))
    let mut prod = 1.0;
    let mut z = x;
    while z < 10.0 {
        prod *= z;
        z += 1.0;
    }
    (z - 0.5) * z.ln() - z + LN_SQRT_2PI + stirling_correction(z) - prod.ln()
}

/// `ln Gamma(x)` for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::domain(alloc::format!("log_gamma needs x > 0, got {x}")));
    }
    Ok(ln_gamma_unchecked(x))
}

pub(crate) fn ln_beta_unchecked(a: f64, b: f64) -> f64 {
    if a.min(b) >= 10.0 {
        // Stirling form grouped so that the O(a ln a) terms cancel analytically.
        let s = a + b;
        LN_SQRT_2PI - 0.5 * s.ln()
            + (a - 0.5) * (a / s).ln()
            + (b - 0.5) * (b / s).ln()
            + stirling_correction(a)
            + stirling_correction(b)
            - stirling_correction(s)
    } else {
        ln_gamma_unchecked(a) + ln_gamma_unchecked(b) - ln_gamma_unchecked(a + b)
    }
}

/// `ln B(a, b) = ln Gamma(a) + ln Gamma(b) - ln Gamma(a + b)`.
pub fn log_beta(a: f64, b: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite() && a > 0.0 && b > 0.0) {
        return Err(Error::domain(alloc::format!(
            "log_beta needs a, b > 0, got ({a}, {b})"
        )));
    }
    Ok(ln_beta_unchecked(a, b))
}

/// `ln(1 - e^l)` for `l <= 0`.
pub(crate) fn ln_1m_exp(l: f64) -> f64 {
    if l > -core::f64::consts::LN_2 {
        (-l.exp_m1()).ln()
    } else {
        (-l.exp()).ln_1p()
    }
}

/// `ln(e^a + e^b)`
#[cfg(test)]
pub(crate) fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Modified Lentz evaluation of the incomplete-beta continued fraction.
fn beta_continued_fraction(x: f64, a: f64, b: f64) -> Result<f64> {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < CF_TINY {
        d = CF_TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_EPS {
            return Ok(h);
        }
    }
    Err(Error::numerical(
        "reg_inc_beta",
        alloc::format!("continued fraction did not converge for x={x}, a={a}, b={b}"),
    ))
}

/// `ln I_x(a, b)` straight from the continued fraction; accurate when
/// `x <= a / (a + b)`.
fn log_inc_beta_direct(x: f64, a: f64, b: f64) -> Result<f64> {
    let ln_front = a * x.ln() + b * (-x).ln_1p() - ln_beta_unchecked(a, b) - a.ln();
    Ok(ln_front + beta_continued_fraction(x, a, b)?.ln())
}

/// Both log tails `(ln I_x(a,b), ln(1 - I_x(a,b)))`.
///
/// The tail on the near side of the mean `a / (a + b)` is computed directly;
/// the other one through `I_x(a, b) = 1 - I_{1-x}(b, a)`.
pub fn log_inc_beta_tails(x: f64, a: f64, b: f64) -> Result<(f64, f64)> {
    check_beta_args(x, a, b)?;
    if x == 0.0 {
        return Ok((f64::NEG_INFINITY, 0.0));
    }
    if x == 1.0 {
        return Ok((0.0, f64::NEG_INFINITY));
    }
    if x > a / (a + b) {
        let upper = log_inc_beta_direct(1.0 - x, b, a)?;
        Ok((ln_1m_exp(upper), upper))
    } else {
        let lower = log_inc_beta_direct(x, a, b)?;
        Ok((lower, ln_1m_exp(lower)))
    }
}

fn check_beta_args(x: f64, a: f64, b: f64) -> Result<()> {
    if !(a.is_finite() && b.is_finite() && a > 0.0 && b > 0.0) {
        return Err(Error::domain(alloc::format!(
            "incomplete beta needs a, b > 0, got ({a}, {b})"
        )));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::domain(alloc::format!(
            "incomplete beta needs 0 <= x <= 1, got {x}"
        )));
    }
    Ok(())
}

/// Regularized incomplete beta function `I_x(a, b)`.
pub fn reg_inc_beta(x: f64, a: f64, b: f64) -> Result<f64> {
    let (lower, _) = log_inc_beta_tails(x, a, b)?;
    Ok(lower.exp().clamp(0.0, 1.0))
}

/// Log density of `Beta(a, b)` at `t`.
pub fn beta_log_density(t: f64, a: f64, b: f64) -> f64 {
    if !(0.0..=1.0).contains(&t) {
        return f64::NEG_INFINITY;
    }
    let lt = if a == 1.0 { 0.0 } else { (a - 1.0) * t.ln() };
    let l1t = if b == 1.0 { 0.0 } else { (b - 1.0) * (-t).ln_1p() };
    lt + l1t - ln_beta_unchecked(a, b)
}

/// `ln(e^big - e^small)`, or `None` when the difference has cancelled.
fn log_sub_exp_checked(big: f64, small: f64) -> Option<f64> {
    if small == f64::NEG_INFINITY {
        return Some(big);
    }
    let ratio = (small - big).exp();
    if !(ratio < 1.0 - TRUNC_MASS_CANCELLATION) {
        return None;
    }
    Some(big + (-ratio).ln_1p())
}

/// `ln{I_u(a, b) - I_l(a, b)}`, the log mass of `Beta(a, b)` on `[l, u]`.
pub fn log_trunc_beta_mass(a: f64, b: f64, l: f64, u: f64) -> Result<f64> {
    check_beta_args(l, a, b)?;
    check_beta_args(u, a, b)?;
    if !(l < u) {
        return Err(Error::domain(alloc::format!(
            "truncation interval needs l < u, got [{l}, {u}]"
        )));
    }
    if l == 0.0 && u == 1.0 {
        return Ok(0.0);
    }

    let direct = log_trunc_beta_mass_direct(a, b, l, u);
    match direct {
        Ok(Some(v)) if v.is_finite() && v >= TRUNC_MASS_UNDERFLOW.ln() => Ok(v.min(0.0)),
        _ => {
            let opts = QuadOptions {
                rel_tol: 1e-12,
                ..QuadOptions::default()
            };
            let q = quad::log_integrate(|t| beta_log_density(t, a, b), l, u, &opts).map_err(
                |e| {
                    Error::numerical(
                        "log_trunc_beta_mass",
                        alloc::format!("direct difference and quadrature both failed: {e}"),
                    )
                },
            )?;
            Ok(q.log_value.min(0.0))
        }
    }
}

fn log_trunc_beta_mass_direct(a: f64, b: f64, l: f64, u: f64) -> Result<Option<f64>> {
    let (lower_l, upper_l) = log_inc_beta_tails(l, a, b)?;
    let (lower_u, upper_u) = log_inc_beta_tails(u, a, b)?;
    let mean = a / (a + b);
    Ok(if u <= mean {
        log_sub_exp_checked(lower_u, lower_l)
    } else if l >= mean {
        log_sub_exp_checked(upper_l, upper_u)
    } else {
        // both tails outside [l, u] are each at most one half
        Some((-(lower_l.exp() + upper_u.exp())).ln_1p())
    })
}

/// Log tails `(ln P(s, x), ln Q(s, x))` of the regularized incomplete gamma function.
fn log_reg_gamma_tails(s: f64, x: f64) -> Result<(f64, f64)> {
    if x == 0.0 {
        return Ok((f64::NEG_INFINITY, 0.0));
    }
    let ln_gs = ln_gamma_unchecked(s);
    if x < s + 1.0 {
        let mut ap = s;
        let mut term = 1.0 / s;
        let mut sum = term;
        let mut converged = false;
        for _ in 0..CF_MAX_ITER {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * CF_EPS {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::numerical(
                "reg_lower_gamma",
                alloc::format!("series did not converge for s={s}, x={x}"),
            ));
        }
        let lp = s * x.ln() - x - ln_gs + sum.ln();
        Ok((lp, ln_1m_exp(lp)))
    } else {
        let mut b = x + 1.0 - s;
        let mut c = 1.0 / CF_TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        let mut converged = false;
        for i in 1..CF_MAX_ITER {
            let an = -(i as f64) * (i as f64 - s);
            b += 2.0;
            d = an * d + b;
            if d.abs() < CF_TINY {
                d = CF_TINY;
            }
            c = b + an / c;
            if c.abs() < CF_TINY {
                c = CF_TINY;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < CF_EPS {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::numerical(
                "reg_upper_gamma",
                alloc::format!("continued fraction did not converge for s={s}, x={x}"),
            ));
        }
        let lq = s * x.ln() - x - ln_gs + h.ln();
        Ok((ln_1m_exp(lq), lq))
    }
}

/// Regularized lower incomplete gamma function `P(s, x)`.
pub fn reg_lower_gamma(s: f64, x: f64) -> Result<f64> {
    if !(s.is_finite() && s > 0.0) || !(x >= 0.0) {
        return Err(Error::domain(alloc::format!(
            "reg_lower_gamma needs s > 0, x >= 0, got ({s}, {x})"
        )));
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    Ok(log_reg_gamma_tails(s, x)?.0.exp())
}

/// Central chi-squared CDF.
pub fn chisq_cdf(x: f64, df: f64) -> Result<f64> {
    if !(df.is_finite() && df > 0.0) {
        return Err(Error::domain(alloc::format!("chisq_cdf needs df > 0, got {df}")));
    }
    if x <= 0.0 {
        return Ok(0.0);
    }
    reg_lower_gamma(0.5 * df, 0.5 * x)
}

/// `Pr(chi^2_{df, lambda} <= x)` as a Poisson(lambda / 2) mixture of central
/// chi-squared CDFs, summed outward from the Poisson mode.
pub fn noncentral_chisq_cdf(x: f64, df: f64, lambda: f64) -> Result<f64> {
    if !(x >= 0.0) || !(df.is_finite() && df > 0.0) || !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::domain(alloc::format!(
            "noncentral_chisq_cdf needs x >= 0, df > 0, lambda >= 0, got ({x}, {df}, {lambda})"
        )));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    if lambda == 0.0 {
        return chisq_cdf(x, df);
    }

    const REL_STOP: f64 = 1e-16;
    const ABS_STOP: f64 = 1e-20;
    const MAX_TERMS: u64 = 10_000_000;

    let half = 0.5 * lambda;
    let ln_half = half.ln();
    let log_weight = |j: u64| -half + (j as f64) * ln_half - ln_gamma_unchecked(j as f64 + 1.0);
    let mode = half.floor() as u64;
    let term = |j: u64| -> Result<(f64, f64)> {
        let w = log_weight(j).exp();
        let p = reg_lower_gamma(0.5 * df + j as f64, 0.5 * x)?;
        Ok((w, w * p))
    };

    let (_, t0) = term(mode)?;
    let mut sum = t0;

    // upward: weights and CDF values both decrease
    let mut j = mode;
    loop {
        j += 1;
        let (w, t) = term(j)?;
        sum += t;
        if t <= REL_STOP * sum || w < ABS_STOP {
            break;
        }
        if j - mode > MAX_TERMS {
            return Err(Error::numerical("noncentral_chisq_cdf", "upward series did not converge"));
        }
    }
    // downward: terms are bounded by their Poisson weight
    let mut j = mode;
    while j > 0 {
        j -= 1;
        let (w, t) = term(j)?;
        sum += t;
        if w <= REL_STOP * sum || w < ABS_STOP {
            break;
        }
    }
    Ok(sum.clamp(0.0, 1.0))
}

/// `ln N(x | mean, variance)`
pub fn normal_log_density(x: f64, mean: f64, variance: f64) -> Result<f64> {
    if !(variance.is_finite() && variance > 0.0) {
        return Err(Error::domain(alloc::format!(
            "normal density needs variance > 0, got {variance}"
        )));
    }
    Ok(normal_log_density_unchecked(x, mean, variance))
}

#[inline]
pub(crate) fn normal_log_density_unchecked(x: f64, mean: f64, variance: f64) -> f64 {
    let d = x - mean;
    -0.5 * (LN_2PI + variance.ln()) - d * d / (2.0 * variance)
}

/// Log density of the half-normal distribution with scale `scale` at `tau >= 0`.
pub fn half_normal_log_density(tau: f64, scale: f64) -> Result<f64> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::domain(alloc::format!(
            "half-normal needs scale > 0, got {scale}"
        )));
    }
    if !(tau >= 0.0) {
        return Err(Error::domain(alloc::format!(
            "half-normal density needs tau >= 0, got {tau}"
        )));
    }
    Ok(half_normal_log_density_unchecked(tau, scale))
}

#[inline]
pub(crate) fn half_normal_log_density_unchecked(tau: f64, scale: f64) -> f64 {
    LN_SQRT_2_OVER_PI - scale.ln() - tau * tau / (2.0 * scale * scale)
}
