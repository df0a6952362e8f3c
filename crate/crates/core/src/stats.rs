// SPDX-License-Identifier: MIT OR Apache-2.0

//! Scalar statistics: the difference-based noise variance, the folded-normal
//! distribution that calibrates the screening threshold, and the standard
//! normal quantile used for two-sided merge tests.
//!
//! The folded-normal CDF is evaluated through `F(x) = erf(x / √2)`. `erf` is
//! summed from its everywhere-positive power series on `[0, 2.5)` and `erfc`
//! from its continued fraction beyond that, giving close to full double
//! precision in both the body and the tails.

use crate::error::{Result, SameError};
use crate::series::Series;

const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;
const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;
const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Switch-over point between the erf series and the erfc continued fraction.
const ERF_SPLIT: f64 = 2.5;
const MAX_ROOT_ITERS: usize = 200;

/// Noise variance estimate `s2` together with its square root.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceEstimate {
    pub s2: f64,
    pub s: f64,
}

impl VarianceEstimate {
    fn from_s2(s2: f64) -> Self {
        Self { s2, s: s2.sqrt() }
    }
}

/// Difference-based variance estimator, `Σ (x_i − x_{i−1})² / (2(n − 1))`.
///
/// Only first differences enter, so a few mean shifts inflate the estimate
/// by `O(h² / n)` each.
pub fn diff_variance(series: &Series) -> Result<VarianceEstimate> {
    let values = series.values();
    let n = values.len();
    if n < 2 {
        return Err(SameError::invalid_input(format!(
            "variance estimation needs at least 2 observations, got {n}"
        )));
    }
    let sum_sq: f64 = values
        .windows(2)
        .map(|w| {
            let d = w[1] - w[0];
            d * d
        })
        .sum();
    Ok(VarianceEstimate::from_s2(sum_sq / (2.0 * (n - 1) as f64)))
}

/// `erf(y)` for `0 ≤ y < ERF_SPLIT` via `2/√π · e^{−y²} · Σ 2ⁿ y^{2n+1} / (2n+1)!!`.
fn erf_series(y: f64) -> f64 {
    let y2 = y * y;
    let mut term = y;
    let mut sum = y;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= 2.0 * y2 / (2.0 * k + 1.0);
        sum += term;
        if term <= sum * 1e-17 {
            break;
        }
    }
    2.0 * FRAC_1_SQRT_PI * (-y2).exp() * sum
}

/// `erfc(y)` for `y ≥ ERF_SPLIT` from the continued fraction
/// `e^{−y²}/√π · 1/(y + (1/2)/(y + 1/(y + (3/2)/(y + …))))`, modified Lentz.
fn erfc_continued_fraction(y: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = y;
    let mut c = y;
    let mut d = 0.0;
    for j in 1..500 {
        let a = j as f64 * 0.5;
        d = y + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = y + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    FRAC_1_SQRT_PI * (-y * y).exp() / f
}

/// Error function for `y ≥ 0`.
fn erf_nonneg(y: f64) -> f64 {
    if y < ERF_SPLIT {
        erf_series(y)
    } else {
        1.0 - erfc_continued_fraction(y)
    }
}

/// Complementary error function for `y ≥ 0`.
fn erfc_nonneg(y: f64) -> f64 {
    if y < ERF_SPLIT {
        1.0 - erf_series(y)
    } else {
        erfc_continued_fraction(y)
    }
}

/// Standard normal density.
pub fn normal_pdf(z: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * z * z).exp()
}

/// Standard normal CDF `Φ(z)`.
pub fn normal_cdf(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    let y = z.abs() * std::f64::consts::FRAC_1_SQRT_2;
    let tail = 0.5 * erfc_nonneg(y);
    if z < 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

/// Upper normal tail `1 − Φ(z)` for `z ≥ 0`, without cancellation.
fn normal_upper_tail(z: f64) -> f64 {
    0.5 * erfc_nonneg(z * std::f64::consts::FRAC_1_SQRT_2)
}

/// CDF of `|Z|` for standard normal `Z`.
pub fn folded_cdf(x: f64) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(SameError::invalid_input(format!(
            "folded-normal CDF is defined for x >= 0, got {x}"
        )));
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    Ok(erf_nonneg(x * std::f64::consts::FRAC_1_SQRT_2))
}

/// Upper tail `P(|Z| > x)` for `x ≥ 0`.
fn folded_upper_tail(x: f64) -> f64 {
    erfc_nonneg(x * std::f64::consts::FRAC_1_SQRT_2)
}

/// Solves `tail(x) = target` on `x ≥ 0` for a decreasing tail function with
/// derivative `−density(x)`, by Newton steps kept inside a shrinking bracket.
fn invert_upper_tail(
    target: f64,
    mut x: f64,
    tail: impl Fn(f64) -> f64,
    density: impl Fn(f64) -> f64,
) -> f64 {
    let mut lo = 0.0;
    let mut hi = x.max(1.0);
    while tail(hi) > target {
        lo = hi;
        hi *= 2.0;
    }
    if !(lo..=hi).contains(&x) {
        x = 0.5 * (lo + hi);
    }
    for _ in 0..MAX_ROOT_ITERS {
        let g = tail(x) - target;
        if g == 0.0 {
            return x;
        }
        if g > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let slope = density(x);
        let newton = x + g / slope;
        let next = if slope > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 4.0 * f64::EPSILON * x.max(1.0) || hi - lo <= f64::EPSILON {
            return next;
        }
        x = next;
    }
    x
}

/// Screening threshold `δ(α)`: the `1 − α` quantile of the folded normal.
pub fn folded_quantile(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(SameError::invalid_input(format!(
            "folded-normal quantile level must lie in (0, 1], got {alpha}"
        )));
    }
    if alpha == 1.0 {
        return Ok(0.0);
    }
    let guess = upper_tail_guess(0.5 * alpha);
    Ok(invert_upper_tail(alpha, guess, folded_upper_tail, |x| {
        SQRT_2_OVER_PI * (-0.5 * x * x).exp()
    }))
}

/// Rational starting point for the upper normal quantile of tail mass `q ≤ 0.5`
/// (Abramowitz & Stegun 26.2.23, absolute error below 4.5e-4).
fn upper_tail_guess(q: f64) -> f64 {
    let t = (-2.0 * q.ln()).sqrt();
    let num = 2.515_517 + t * (0.802_853 + t * 0.010_328);
    let den = 1.0 + t * (1.432_788 + t * (0.189_269 + t * 0.001_308));
    (t - num / den).max(0.0)
}

/// Standard normal quantile `Φ⁻¹(p)`.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(SameError::invalid_input(format!(
            "normal quantile level must lie in (0, 1), got {p}"
        )));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    let (tail, sign) = if p < 0.5 { (p, -1.0) } else { (1.0 - p, 1.0) };
    let z = invert_upper_tail(tail, upper_tail_guess(tail), normal_upper_tail, normal_pdf);
    Ok(sign * z)
}
