//! Edgeworth-type skewed perturbations of a symmetric reference density.
//!
//! For a reference density `f1` with score `phi` the standardized model density
//! is `f1(z) * (1 + xi * phi(z) * (z^2 - kappa))` on the window `|z| <= u`,
//! where `u` is the first point beyond `sqrt(kappa)` at which the correction
//! reaches `-1` on the short side. Beyond the window the short tail is cut to
//! zero and its mass is moved to the long tail, which becomes `2 f1(z)`.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{self, QuadOptions};
use crate::reference::{Family, ReferenceDensity};

/// Number of knots in the cached distribution-function table.
const CDF_KNOTS: usize = 2048;
/// Points used to check the density for negativity.
const VALIDITY_GRID: usize = 10_000;
/// Relative step of the outward scan for the truncation point.
const SCAN_STEP: f64 = 1e-3;
/// Largest truncation point the scan will look at.
const SCAN_LIMIT: f64 = 1e9;

/// Serializable description of a model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: Family,
    pub theta: f64,
    pub sigma: f64,
    pub xi: f64,
}

/// The skewed model with its truncation point and cached distribution table.
#[derive(Debug, Clone)]
pub struct EdgeworthModel {
    pub theta: f64,
    pub sigma: f64,
    pub xi: f64,
    pub f1: ReferenceDensity,
    /// Half-width of the perturbation window; infinite when `xi == 0`.
    pub z_star: f64,
    kappa: f64,
    table: Option<Arc<CdfTable>>,
}

#[derive(Debug)]
struct CdfTable {
    start: f64,
    step: f64,
    /// Cumulative perturbation mass at each knot.
    cumulative: Vec<f64>,
}

/// Truncation point `|z*|` of the model with reference density `f1` and
/// skewness `xi`: the smallest `u > sqrt(kappa)` with
/// `f1(u) = |xi| |f1'(u)| (u^2 - kappa)`.
pub fn solve_z_star(f1: &ReferenceDensity, xi: f64) -> Result<f64> {
    if xi == 0.0 || !xi.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "truncation point needs a finite nonzero skewness, got {xi}"
        )));
    }
    let kappa = f1.information_set().kappa;
    let gap = |u: f64| xi.abs() * f1.score(u) * (u * u - kappa) - 1.0;
    let mut lo = kappa.sqrt();
    loop {
        let hi = lo + SCAN_STEP * lo.max(1.0);
        if hi > SCAN_LIMIT {
            return Err(Error::XiTooLarge {
                xi,
                family: f1.family.to_string(),
                reason: "no truncation point found".into(),
            });
        }
        if gap(hi) >= 0.0 {
            return numerics::bisect(gap, lo, hi);
        }
        lo = hi;
    }
}

impl EdgeworthModel {
    pub fn new(f1: ReferenceDensity, theta: f64, sigma: f64, xi: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "scale must be positive and finite, got {sigma}"
            )));
        }
        if !theta.is_finite() || !xi.is_finite() {
            return Err(Error::InvalidParameter(
                "location and skewness must be finite".into(),
            ));
        }
        let kappa = f1.information_set().kappa;
        let mut model = Self {
            theta,
            sigma,
            xi,
            f1,
            z_star: f64::INFINITY,
            kappa,
            table: None,
        };
        if xi != 0.0 {
            model.z_star = solve_z_star(&f1, xi)?;
            model.check_nonnegative()?;
            model.table = Some(Arc::new(model.build_table()?));
        }
        Ok(model)
    }

    pub fn from_spec(spec: &ModelSpec) -> Result<Self> {
        Self::new(
            ReferenceDensity::new(spec.family)?,
            spec.theta,
            spec.sigma,
            spec.xi,
        )
    }

    pub fn spec(&self) -> ModelSpec {
        ModelSpec {
            family: self.f1.family,
            theta: self.theta,
            sigma: self.sigma,
            xi: self.xi,
        }
    }

    /// Ratio of the standardized model density to `f1`, in `[0, 2]`.
    pub fn weight(&self, z: f64) -> f64 {
        if self.xi == 0.0 {
            return 1.0;
        }
        if z.abs() <= self.z_star {
            1.0 + self.xi * self.f1.score(z) * (z * z - self.kappa)
        } else if (z > 0.0) == (self.xi > 0.0) {
            2.0
        } else {
            0.0
        }
    }

    /// Density of the standardized variable `(X - theta) / sigma`.
    pub fn standardized_density(&self, z: f64) -> f64 {
        self.f1.density(z) * self.weight(z)
    }

    pub fn density(&self, x: f64) -> f64 {
        self.standardized_density((x - self.theta) / self.sigma) / self.sigma
    }

    fn perturbation(&self, t: f64) -> f64 {
        self.xi * self.f1.score(t) * self.f1.density(t) * (t * t - self.kappa)
    }

    fn check_nonnegative(&self) -> Result<()> {
        let u = self.z_star;
        for i in 0..=VALIDITY_GRID {
            let z = -u + 2.0 * u * i as f64 / VALIDITY_GRID as f64;
            let w = self.weight(z);
            if w < -1e-12 {
                return Err(Error::XiTooLarge {
                    xi: self.xi,
                    family: self.f1.family.to_string(),
                    reason: format!("density is negative near z = {z:.4}"),
                });
            }
        }
        Ok(())
    }

    fn build_table(&self) -> Result<CdfTable> {
        let start = -self.z_star;
        let step = 2.0 * self.z_star / CDF_KNOTS as f64;
        let mut cumulative = Vec::with_capacity(CDF_KNOTS + 1);
        let mut acc = 0.0;
        cumulative.push(0.0);
        for j in 0..CDF_KNOTS {
            let a = start + j as f64 * step;
            let b = if j + 1 == CDF_KNOTS {
                self.z_star
            } else {
                start + (j + 1) as f64 * step
            };
            acc += numerics::integrate(|t| self.perturbation(t), a, b, QuadOptions::default())?;
            cumulative.push(acc);
        }
        Ok(CdfTable {
            start,
            step,
            cumulative,
        })
    }

    /// Perturbation mass between `-z_star` and `z`, for `|z| <= z_star`.
    fn perturbation_mass(&self, z: f64) -> f64 {
        let table = self.table.as_ref().expect("table exists when xi != 0");
        let j = (((z - table.start) / table.step).floor() as usize).min(CDF_KNOTS - 1);
        let knot = table.start + j as f64 * table.step;
        let (qv, _) = numerics::gauss_kronrod15(&|t| self.perturbation(t), knot, z);
        table.cumulative[j] + qv
    }

    /// Distribution function of the standardized variable.
    pub fn standardized_cdf(&self, z: f64) -> f64 {
        let f1 = &self.f1;
        if self.xi == 0.0 {
            return f1.cdf(z);
        }
        let u = self.z_star;
        let value = if self.xi > 0.0 {
            if z < -u {
                0.0
            } else if z <= u {
                f1.cdf(z) - f1.cdf(-u) + self.perturbation_mass(z)
            } else {
                1.0 - 2.0 * f1.cdf(-z)
            }
        } else if z < -u {
            2.0 * f1.cdf(z)
        } else if z <= u {
            f1.cdf(-u) + f1.cdf(z) + self.perturbation_mass(z)
        } else {
            1.0
        };
        value.clamp(0.0, 1.0)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.standardized_cdf((x - self.theta) / self.sigma)
    }

    /// Expectation of `h(Z)` for the standardized variable, by quadrature
    /// over the pieces of the density.
    pub fn standardized_expectation<H: Fn(f64) -> f64>(&self, h: H) -> Result<f64> {
        let opts = QuadOptions::default();
        let g = |z: f64| h(z) * self.standardized_density(z);
        let u = self.z_star;
        if !u.is_finite() {
            let right = numerics::integrate(&g, 0.0, 1.0, opts)?
                + numerics::integrate_upper_tail(&g, 1.0, opts)?;
            let left = numerics::integrate(|z| g(-z), 0.0, 1.0, opts)?
                + numerics::integrate_upper_tail(|z| g(-z), 1.0, opts)?;
            return Ok(left + right);
        }
        let middle = numerics::integrate(&g, -u, 0.0, opts)? + numerics::integrate(&g, 0.0, u, opts)?;
        let tail = if self.xi > 0.0 {
            numerics::integrate_upper_tail(|z| 2.0 * h(z) * self.f1.density(z), u, opts)?
        } else {
            numerics::integrate_upper_tail(|z| 2.0 * h(-z) * self.f1.density(z), u, opts)?
        };
        Ok(middle + tail)
    }

    /// One draw by rejection from `f1` with envelope constant 2, together
    /// with the number of proposals it took.
    pub fn draw_counting<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, u64) {
        let mut proposals = 0;
        loop {
            proposals += 1;
            let z = self.f1.sample(rng);
            let accept = self.xi == 0.0 || 2.0 * rng.random::<f64>() < self.weight(z);
            if accept {
                return (self.theta + self.sigma * z, proposals);
            }
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.draw_counting(rng).0
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        (0..n).map(|_| self.draw(rng)).collect()
    }
}
