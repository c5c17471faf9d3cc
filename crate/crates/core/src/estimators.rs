//! Nuisance estimators: median, median absolute deviation, lattice
//! discretization, empirical moments and a kernel density estimate at zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::normal_pdf;

/// A validated sample of at least two finite observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    values: Vec<f64>,
}

impl Sample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::DegenerateSample(format!(
                "need at least 2 observations, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::DegenerateSample(format!(
                "observation {} is not finite",
                i + 1
            )));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.values
    }
}

impl AsRef<[f64]> for Sample {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

/// Lattice discretization of estimates, on by default with `c = 100`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Discretization {
    pub enabled: bool,
    pub c: f64,
}

impl Default for Discretization {
    fn default() -> Self {
        Self {
            enabled: true,
            c: DEFAULT_LATTICE_CONSTANT,
        }
    }
}

impl Discretization {
    pub fn off() -> Self {
        Self {
            enabled: false,
            ..Self::default()
        }
    }

    /// Applies the lattice rounding when enabled.
    pub fn apply(&self, value: f64, n: usize) -> f64 {
        if self.enabled {
            discretize(value, n, self.c)
        } else {
            value
        }
    }
}

pub const DEFAULT_LATTICE_CONSTANT: f64 = 100.0;

/// Location and scale estimates used by a statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NuisanceEstimates {
    pub theta_hat: f64,
    pub sigma_hat: Option<f64>,
    /// Lattice constant, when the estimates were discretized.
    pub lattice_constant: Option<f64>,
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

fn median_of_sorted(v: &[f64]) -> f64 {
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Sample median; for even sizes, the midpoint of the two central values.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of an empty sample");
    median_of_sorted(&sorted(values))
}

/// Median of `|x - theta|`.
pub fn mad_scale(values: &[f64], theta: f64) -> Result<f64> {
    let deviations: Vec<f64> = values.iter().map(|x| (x - theta).abs()).collect();
    let mad = median(&deviations);
    if mad > 0.0 {
        Ok(mad)
    } else {
        Err(Error::DegenerateSample(
            "median absolute deviation is zero".into(),
        ))
    }
}

/// Rounds `lambda` away from zero onto the lattice of step `1 / (c sqrt(n))`.
/// Values already on the lattice, up to rounding error, are left there.
pub fn discretize(lambda: f64, n: usize, c: f64) -> f64 {
    assert!(c > 0.0, "lattice constant must be positive");
    if lambda == 0.0 {
        return 0.0;
    }
    let scale = c * (n as f64).sqrt();
    let m = scale * lambda.abs();
    let nearest = m.round();
    let steps = if (m - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest
    } else {
        m.ceil()
    };
    lambda.signum() * steps / scale
}

/// Mean of `(x - center)^k`.
pub fn empirical_moment(values: &[f64], k: i32, center: f64) -> f64 {
    values.iter().map(|x| (x - center).powi(k)).sum::<f64>() / values.len() as f64
}

/// Sample quantile with linear interpolation between order statistics.
fn quantile_of_sorted(v: &[f64], p: f64) -> f64 {
    let h = (v.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(v.len() - 1);
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

/// Bandwidth of the Silverman rule, `1.06 min(sd, IQR / 1.349) n^(-1/5)`.
pub fn silverman_bandwidth(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = (values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let v = sorted(values);
    let iqr = quantile_of_sorted(&v, 0.75) - quantile_of_sorted(&v, 0.25);
    let spread = match (sd > 0.0, iqr > 0.0) {
        (true, true) => sd.min(iqr / 1.349),
        (true, false) => sd,
        _ => 0.0,
    };
    1.06 * spread * n.powf(-0.2)
}

/// Gaussian-kernel density estimate at zero with the Silverman bandwidth.
pub fn kde_at_zero(values: &[f64]) -> Result<f64> {
    if values.len() < 10 {
        return Err(Error::DegenerateSample(format!(
            "kernel density estimate needs at least 10 observations, got {}",
            values.len()
        )));
    }
    let h = silverman_bandwidth(values);
    if h <= 0.0 {
        return Err(Error::DegenerateSample(
            "residuals have zero spread".into(),
        ));
    }
    let sum: f64 = values.iter().map(|z| normal_pdf(z / h)).sum();
    let estimate = sum / (values.len() as f64 * h);
    if estimate > 0.0 {
        Ok(estimate)
    } else {
        Err(Error::DegenerateSample(
            "kernel density estimate at zero underflowed".into(),
        ))
    }
}
