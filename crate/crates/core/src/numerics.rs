//! Small numerical toolkit: adaptive Gauss-Kronrod quadrature, bracketed
//! root finding and normal distribution helpers.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use statrs::function::erf::{erfc, erfc_inv};

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Weights of the embedded 7-point Gauss rule, on XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_94,
    0.417_959_183_673_469_4,
];

/// Tolerances for adaptive quadrature.
#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-13,
            rel_tol: 1e-12,
            max_intervals: 4000,
        }
    }
}

/// One 15-point Kronrod evaluation on `[a, b]`, returning the estimate and
/// the difference with the embedded Gauss rule.
pub fn gauss_kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
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

/// Adaptive integration of `f` over the finite interval `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Numerical(format!(
            "integration bounds must be finite, got [{a}, {b}]"
        )));
    }
    let (value, error) = gauss_kronrod15(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, error });
    let mut total = value;
    let mut total_err = error;
    while total_err > opts.abs_tol.max(opts.rel_tol * total.abs()) {
        if heap.len() >= opts.max_intervals {
            // Accept results whose residual error is pure rounding noise.
            if total_err <= 1e-9_f64.max(1e-9 * total.abs()) {
                break;
            }
            return Err(Error::Numerical(format!(
                "quadrature on [{a}, {b}] did not converge (error estimate {total_err:e})"
            )));
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval cannot be split any further in floating point.
            heap.push(Segment {
                error: 0.0,
                ..worst
            });
            total_err -= worst.error;
            continue;
        }
        let (lv, le) = gauss_kronrod15(&f, worst.a, mid);
        let (rv, re) = gauss_kronrod15(&f, mid, worst.b);
        total += lv + rv - worst.value;
        total_err += le + re - worst.error;
        heap.push(Segment {
            a: worst.a,
            b: mid,
            value: lv,
            error: le,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            value: rv,
            error: re,
        });
    }
    // Re-sum to shed accumulated update drift.
    let value: f64 = heap.iter().map(|s| s.value).sum();
    if !value.is_finite() {
        return Err(Error::Numerical(format!(
            "quadrature on [{a}, {b}] produced a non-finite value"
        )));
    }
    Ok(value)
}

/// Power of the substitution `x = a / u^TAIL_POWER` used for upper tails.
/// An integrand decaying like `x^-p` becomes `u^(4(p - 1) - 1)`, which is
/// bounded for every `p >= 1.25` and integrable for every `p > 1`.
const TAIL_POWER: i32 = 4;

/// Integral of `f` over `[a, +inf)`.
pub fn integrate_upper_tail<F: Fn(f64) -> f64>(f: F, a: f64, opts: QuadOptions) -> Result<f64> {
    let (head, a) = if a < 1.0 {
        (integrate(&f, a, 1.0, opts)?, 1.0)
    } else {
        (0.0, a)
    };
    let q = TAIL_POWER as f64;
    integrate(
        |u: f64| {
            let v = f(a / u.powi(TAIL_POWER));
            if v == 0.0 {
                0.0
            } else {
                v * q * a / u.powi(TAIL_POWER + 1)
            }
        },
        0.0,
        1.0,
        opts,
    )
    .map(|tail| head + tail)
}

/// Integral over the real line of an even function `f`.
pub fn integrate_even<F: Fn(f64) -> f64>(f: F, opts: QuadOptions) -> Result<f64> {
    // Split at 1 so the bulk of the mass is handled on a finite interval.
    let head = integrate(&f, 0.0, 1.0, opts)?;
    let tail = integrate_upper_tail(&f, 1.0, opts)?;
    Ok(2.0 * (head + tail))
}

/// Bisection for a sign change of `f` on `[lo, hi]`, run until the bracket
/// collapses to adjacent floating-point numbers.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> Result<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() || flo.is_nan() || fhi.is_nan() {
        return Err(Error::Numerical(format!(
            "root not bracketed on [{lo}, {hi}]"
        )));
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Root of an increasing-or-decreasing `f` on the positive half-line,
/// starting from the bracket `[lo, hi]` and widening it geometrically.
pub fn bracket_positive_root<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> Result<f64> {
    let target_sign = |x: f64| f(x).signum();
    for _ in 0..200 {
        if target_sign(lo) != target_sign(hi) {
            return bisect(&f, lo, hi);
        }
        lo *= 0.5;
        hi *= 2.0;
    }
    Err(Error::Numerical(
        "could not bracket a positive root".to_string(),
    ))
}

/// Standard normal distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal upper tail, accurate far into the right tail.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Standard normal quantile function.
pub fn normal_quantile(p: f64) -> f64 {
    -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p)
}
