//! Special functions used by the beta likelihood, the link functions and the
//! quantile bands.
//!
//! Everything here is a pure `f64` kernel. Functions that can be called with
//! arguments outside their domain return [`Error::Domain`]; the hot internal
//! paths use the unchecked `*_unchecked` variants after validating once.

use std::f64::consts::PI;

use crate::error::{domain, Error, Result};

const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Maximum number of continued-fraction terms in [`beta_cdf`].
pub const CONTINUED_FRACTION_CAP: usize = 200;
/// Maximum number of safeguarded Newton iterations in [`beta_quantile`].
pub const QUANTILE_ITERATION_CAP: usize = 100;

/// Natural log of the gamma function for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(domain("log_gamma", format!("x = {x} must be positive")));
    }
    Ok(log_gamma_unchecked(x))
}

pub(crate) fn log_gamma_unchecked(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection: Γ(x)Γ(1-x) = π / sin(πx)
        return (PI / (PI * x).sin()).ln() - log_gamma_unchecked(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    HALF_LN_2PI + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Digamma function ψ(x) = d/dx ln Γ(x) for `x > 0`.
pub fn digamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(domain("digamma", format!("x = {x} must be positive")));
    }
    Ok(digamma_unchecked(x))
}

pub(crate) fn digamma_unchecked(mut x: f64) -> f64 {
    let mut shift = 0.0;
    while x < 10.0 {
        shift -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // Asymptotic expansion with Bernoulli numbers B2..B14.
    let series = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2
                        * (1.0 / 252.0
                            - inv2
                                * (1.0 / 240.0
                                    - inv2 * (1.0 / 132.0 - inv2 * (691.0 / 32760.0 - inv2 / 12.0))))));
    shift + x.ln() - 0.5 * inv - series
}

/// Trigamma function ψ'(x) for `x > 0`.
pub fn trigamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(domain("trigamma", format!("x = {x} must be positive")));
    }
    Ok(trigamma_unchecked(x))
}

pub(crate) fn trigamma_unchecked(mut x: f64) -> f64 {
    let mut shift = 0.0;
    while x < 10.0 {
        shift += 1.0 / (x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv
        + 0.5 * inv2
        + inv
            * inv2
            * (1.0 / 6.0
                - inv2
                    * (1.0 / 30.0
                        - inv2
                            * (1.0 / 42.0
                                - inv2 * (1.0 / 30.0 - inv2 * (5.0 / 66.0 - inv2 * (691.0 / 2730.0 - inv2 * 7.0 / 6.0))))));
    shift + series
}

fn ln_beta(p: f64, q: f64) -> f64 {
    log_gamma_unchecked(p) + log_gamma_unchecked(q) - log_gamma_unchecked(p + q)
}

fn check_shapes(function: &'static str, p: f64, q: f64) -> Result<()> {
    if !(p > 0.0 && q > 0.0) || !p.is_finite() || !q.is_finite() {
        return Err(domain(function, format!("shapes p = {p}, q = {q} must be positive")));
    }
    Ok(())
}

/// Density of Beta(p, q) at `x`.
pub fn beta_pdf(x: f64, p: f64, q: f64) -> Result<f64> {
    check_shapes("beta_pdf", p, q)?;
    if !(0.0..=1.0).contains(&x) {
        return Err(domain("beta_pdf", format!("x = {x} outside [0, 1]")));
    }
    Ok(beta_pdf_unchecked(x, p, q))
}

fn beta_pdf_unchecked(x: f64, p: f64, q: f64) -> f64 {
    if x == 0.0 || x == 1.0 {
        let shape = if x == 0.0 { p } else { q };
        return match shape.partial_cmp(&1.0) {
            Some(std::cmp::Ordering::Less) => f64::INFINITY,
            Some(std::cmp::Ordering::Equal) => (-ln_beta(p, q)).exp(),
            _ => 0.0,
        };
    }
    ((p - 1.0) * x.ln() + (q - 1.0) * (-x).ln_1p() - ln_beta(p, q)).exp()
}

/// Regularized incomplete beta function I_x(p, q).
///
/// Evaluated by the modified Lentz continued fraction, using the reflection
/// I_x(p, q) = 1 - I_{1-x}(q, p) when `x > (p + 1) / (p + q + 2)`, where the
/// direct fraction converges slowly.
pub fn beta_cdf(x: f64, p: f64, q: f64) -> Result<f64> {
    check_shapes("beta_cdf", p, q)?;
    if !(0.0..=1.0).contains(&x) {
        return Err(domain("beta_cdf", format!("x = {x} outside [0, 1]")));
    }
    beta_cdf_checked_args(x, p, q)
}

fn beta_cdf_checked_args(x: f64, p: f64, q: f64) -> Result<f64> {
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(1.0);
    }
    let ln_front = p * x.ln() + q * (-x).ln_1p() - ln_beta(p, q);
    if x <= (p + 1.0) / (p + q + 2.0) {
        let cf = beta_continued_fraction(x, p, q)?;
        Ok((ln_front.exp() * cf / p).clamp(0.0, 1.0))
    } else {
        let cf = beta_continued_fraction(1.0 - x, q, p)?;
        Ok((1.0 - ln_front.exp() * cf / q).clamp(0.0, 1.0))
    }
}

fn beta_continued_fraction(x: f64, a: f64, b: f64) -> Result<f64> {
    const TINY: f64 = 1e-300;
    const EPS: f64 = f64::EPSILON;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CONTINUED_FRACTION_CAP {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() <= EPS {
            return Ok(h);
        }
    }
    Err(Error::NoConvergence {
        routine: "beta_cdf continued fraction",
        iterations: CONTINUED_FRACTION_CAP,
    })
}

/// Quantile function of Beta(p, q): returns `x` with `I_x(p, q) = u`.
///
/// The problem is reflected so the solver always works on the lower tail
/// (target ≤ 0.5), then a Newton iteration safeguarded by a bracket runs from
/// a closed-form starting guess. Bisection falls back to the geometric mean
/// when the bracket spans orders of magnitude. Quantiles closer to 0 (or 1)
/// than double precision can represent come back as exactly 0 (or 1).
pub fn beta_quantile(u: f64, p: f64, q: f64) -> Result<f64> {
    check_shapes("beta_quantile", p, q)?;
    if !(u > 0.0 && u < 1.0) {
        return Err(domain("beta_quantile", format!("u = {u} outside (0, 1)")));
    }
    if u > 0.5 {
        let y = lower_tail_quantile(1.0 - u, q, p)?;
        return Ok(1.0 - y);
    }
    lower_tail_quantile(u, p, q)
}

fn lower_tail_quantile(u: f64, a: f64, b: f64) -> Result<f64> {
    if beta_cdf_checked_args(f64::MIN_POSITIVE, a, b)? >= u {
        // The exact quantile underflows double precision.
        return Ok(0.0);
    }
    let below_one = 1.0 - f64::EPSILON / 2.0;
    if beta_cdf_checked_args(below_one, a, b)? < u {
        // The exact quantile rounds to 1.
        return Ok(1.0);
    }
    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    let mut x = quantile_initial_guess(u, a, b).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON);
    let ln_b = ln_beta(a, b);
    for _ in 0..QUANTILE_ITERATION_CAP {
        let f = beta_cdf_checked_args(x, a, b)? - u;
        if f == 0.0 {
            return Ok(x);
        }
        if f < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let density = ((a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p() - ln_b).exp();
        let newton = x - f / density;
        let next = if density > 0.0 && newton.is_finite() && newton > lo && newton < hi {
            newton
        } else if lo > 0.0 && hi / lo > 4.0 {
            (lo * hi).sqrt()
        } else if lo == 0.0 {
            // Bracket touches zero: step down by orders of magnitude.
            (hi * 1e-3).max(hi * hi)
        } else {
            0.5 * (lo + hi)
        };
        let step = (next - x).abs();
        x = next;
        if (step <= 2.0 * f64::EPSILON * x && f.abs() <= 1e-9) || hi - lo <= 2.0 * f64::EPSILON * hi {
            break;
        }
    }
    // A bracket down to adjacent doubles is as close as the answer can get,
    // even when the CDF jumps across u between them.
    let collapsed = hi - lo <= 4.0 * f64::EPSILON * hi;
    let residual = (beta_cdf_checked_args(x, a, b)? - u).abs();
    if residual > 1e-9 && !collapsed {
        return Err(Error::NoConvergence {
            routine: "beta_quantile",
            iterations: QUANTILE_ITERATION_CAP,
        });
    }
    Ok(x)
}

// Starting point from the classical approximations (normal-based for large
// shapes, power-law tail otherwise).
fn quantile_initial_guess(u: f64, a: f64, b: f64) -> f64 {
    if a >= 1.0 && b >= 1.0 {
        let pp = if u < 0.5 { u } else { 1.0 - u };
        let t = (-2.0 * pp.ln()).sqrt();
        let mut z = (2.30753 + t * 0.27061) / (1.0 + t * (0.99229 + t * 0.04481)) - t;
        if u >= 0.5 {
            z = -z;
        }
        let al = (z * z - 3.0) / 6.0;
        let h = 2.0 / (1.0 / (2.0 * a - 1.0) + 1.0 / (2.0 * b - 1.0));
        let w = z * (al + h).sqrt() / h
            - (1.0 / (2.0 * b - 1.0) - 1.0 / (2.0 * a - 1.0)) * (al + 5.0 / 6.0 - 2.0 / (3.0 * h));
        a / (a + b * (2.0 * w).exp())
    } else {
        let lna = (a / (a + b)).ln();
        let lnb = (b / (a + b)).ln();
        let t = (a * lna).exp() / a;
        let v = (b * lnb).exp() / b;
        let w = t + v;
        if u < t / w {
            (a * w * u).powf(1.0 / a)
        } else {
            1.0 - (b * w * (1.0 - u)).powf(1.0 / b)
        }
    }
}

/// Standard normal density.
pub fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// Standard normal distribution function Φ(z).
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Standard normal quantile Φ⁻¹(u).
///
/// Acklam's rational approximation followed by one Newton correction.
pub fn std_normal_quantile(u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(domain("std_normal_quantile", format!("u = {u} outside (0, 1)")));
    }
    let z = acklam(u);
    let err = std_normal_cdf(z) - u;
    let density = std_normal_pdf(z);
    if density > 0.0 {
        Ok(z - err / density)
    } else {
        Ok(z)
    }
}

fn acklam(u: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const LOW: f64 = 0.024_25;
    if u < LOW {
        let q = (-2.0 * u.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if u <= 1.0 - LOW {
        let q = u - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - u).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}
