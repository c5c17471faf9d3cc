//! Standardized symmetric reference densities.
//!
//! Every density is scaled so that its median absolute deviation equals one,
//! i.e. the probability mass below `z = 1` is exactly three quarters. The
//! resulting scale constants are found numerically and then used in closed
//! forms for the density, score and information quantities.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;
use statrs::function::gamma::{gamma, gamma_lr, ln_gamma};

use crate::error::{Error, Result};
use crate::numerics::{self, QuadOptions};

/// Largest supported power-exponential shape.
pub const MAX_POWER_EXPONENT: u32 = 5;

/// Shape family of a reference density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Family {
    Gaussian,
    Laplace,
    Logistic,
    PowerExponential(u32),
    StudentT(f64),
}

impl Family {
    /// Checks the shape parameter.
    pub fn validate(&self) -> Result<()> {
        match *self {
            Family::PowerExponential(eta) if !(1..=MAX_POWER_EXPONENT).contains(&eta) => {
                Err(Error::InvalidParameter(format!(
                    "power-exponential shape must be an integer in 1..={MAX_POWER_EXPONENT}, got {eta}"
                )))
            }
            Family::StudentT(nu) if !(nu > 2.0 && nu.is_finite()) => Err(Error::InvalidParameter(
                format!("Student reference density needs more than 2 degrees of freedom, got {nu}"),
            )),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Gaussian => write!(f, "gaussian"),
            Family::Laplace => write!(f, "laplace"),
            Family::Logistic => write!(f, "logistic"),
            Family::PowerExponential(eta) => write!(f, "powerexp:{eta}"),
            Family::StudentT(nu) => write!(f, "student:{nu}"),
        }
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let token = s.trim();
        let bad = |reason: &str| Error::Parse {
            what: "reference family",
            token: token.to_string(),
            reason: reason.to_string(),
        };
        let (head, arg) = match token.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (token, None),
        };
        let family = match (head.to_ascii_lowercase().as_str(), arg) {
            ("gaussian" | "normal", None) => Family::Gaussian,
            ("laplace", None) => Family::Laplace,
            ("logistic", None) => Family::Logistic,
            ("powerexp", Some(a)) => Family::PowerExponential(
                a.parse()
                    .map_err(|_| bad("power-exponential shape must be a positive integer"))?,
            ),
            ("student", Some(a)) => Family::StudentT(
                a.parse()
                    .map_err(|_| bad("degrees of freedom must be a number"))?,
            ),
            ("powerexp" | "student", None) => return Err(bad("missing shape parameter")),
            _ => {
                return Err(bad(
                    "expected gaussian, laplace, logistic, powerexp:<eta> or student:<nu>",
                ))
            }
        };
        family.validate().map_err(|e| bad(&e.to_string()))?;
        Ok(family)
    }
}

impl TryFrom<String> for Family {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Family> for String {
    fn from(f: Family) -> String {
        f.to_string()
    }
}

/// Growth rates used to decide whether an integral against a density
/// converges. A density with `density_power = Some(p)` decays like `|z|^-p`;
/// `None` means faster than any power. Score growth rates are polynomial
/// exponents, with `-inf` for exponentially vanishing functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailBehaviour {
    pub density_power: Option<f64>,
    pub score_growth: f64,
    pub score_derivative_growth: f64,
}

/// A symmetric density with a score function, the common interface used by
/// the efficiency computations.
pub trait SymmetricDensity: Sync {
    fn density(&self, z: f64) -> f64;
    fn score(&self, z: f64) -> f64;
    fn score_derivative(&self, z: f64) -> Result<f64>;
    fn tails(&self) -> TailBehaviour;
    fn describe(&self) -> String;
}

/// Information quantities of a reference density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InformationSet {
    pub i_loc: f64,
    pub j_scale: f64,
    pub k_skew: f64,
    pub kappa: f64,
    pub gamma: f64,
}

impl InformationSet {
    pub fn from_ijk(i_loc: f64, j_scale: f64, k_skew: f64) -> Self {
        let kappa = j_scale / i_loc;
        Self {
            i_loc,
            j_scale,
            k_skew,
            kappa,
            gamma: k_skew - j_scale * kappa,
        }
    }
}

/// A MAD-standardized symmetric reference density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceDensity {
    pub family: Family,
    pub std_constant: f64,
    pub norm_constant: f64,
}

/// Distribution function of the family at `z` for a candidate scale constant.
fn cdf_with_constant(family: Family, c: f64, z: f64) -> f64 {
    match family {
        Family::Gaussian => numerics::normal_cdf(c.sqrt() * z),
        Family::Laplace => {
            if z >= 0.0 {
                1.0 - 0.5 * (-z / c).exp()
            } else {
                0.5 * (z / c).exp()
            }
        }
        Family::Logistic => 1.0 / (1.0 + (-c.sqrt() * z).exp()),
        Family::PowerExponential(eta) => {
            let p = 2.0 * eta as f64;
            let half_mass = 0.5 * gamma_lr(1.0 / p, (c * z.abs()).powf(p));
            if z >= 0.0 {
                0.5 + half_mass
            } else {
                0.5 - half_mass
            }
        }
        Family::StudentT(nu) => student_cdf(nu, c.sqrt() * z),
    }
}

/// Distribution function of the standard Student t law.
pub(crate) fn student_cdf(nu: f64, t: f64) -> f64 {
    let tail = 0.5 * beta_reg(0.5 * nu, 0.5, nu / (nu + t * t));
    if t >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Scale constant making the family MAD-standardized.
pub fn standardization_constant(family: Family) -> Result<f64> {
    family.validate()?;
    numerics::bracket_positive_root(|c| cdf_with_constant(family, c, 1.0) - 0.75, 0.5, 2.0)
}

impl ReferenceDensity {
    pub fn new(family: Family) -> Result<Self> {
        let c = standardization_constant(family)?;
        let norm_constant = match family {
            Family::Gaussian => (c / (2.0 * PI)).sqrt(),
            Family::Laplace => 1.0 / (2.0 * c),
            Family::Logistic => c.sqrt(),
            Family::PowerExponential(eta) => c / (2.0 * gamma(1.0 + 1.0 / (2.0 * eta as f64))),
            Family::StudentT(nu) => {
                (c / nu).sqrt() * (ln_gamma(0.5 * (nu + 1.0)) - ln_gamma(0.5 * nu)).exp()
                    / PI.sqrt()
            }
        };
        Ok(Self {
            family,
            std_constant: c,
            norm_constant,
        })
    }

    pub fn gaussian() -> Self {
        Self::new(Family::Gaussian).expect("Gaussian is always valid")
    }

    pub fn laplace() -> Self {
        Self::new(Family::Laplace).expect("Laplace is always valid")
    }

    pub fn logistic() -> Self {
        Self::new(Family::Logistic).expect("logistic is always valid")
    }

    pub fn density(&self, z: f64) -> f64 {
        let c = self.std_constant;
        let k = self.norm_constant;
        match self.family {
            Family::Gaussian => k * (-0.5 * c * z * z).exp(),
            Family::Laplace => k * (-z.abs() / c).exp(),
            Family::Logistic => {
                // Written in terms of |z| so large arguments do not overflow.
                let e = (-c.sqrt() * z.abs()).exp();
                k * e / ((1.0 + e) * (1.0 + e))
            }
            Family::PowerExponential(eta) => k * (-(c * z.abs()).powi(2 * eta as i32)).exp(),
            Family::StudentT(nu) => k * (1.0 + c * z * z / nu).powf(-0.5 * (nu + 1.0)),
        }
    }

    pub fn cdf(&self, z: f64) -> f64 {
        cdf_with_constant(self.family, self.std_constant, z)
    }

    /// Location score `-f'(z) / f(z)`; the Laplace score at 0 is 0.
    pub fn score(&self, z: f64) -> f64 {
        let c = self.std_constant;
        match self.family {
            Family::Gaussian => c * z,
            Family::Laplace => {
                if z == 0.0 {
                    0.0
                } else {
                    z.signum() / c
                }
            }
            Family::Logistic => c.sqrt() * (0.5 * c.sqrt() * z).tanh(),
            Family::PowerExponential(eta) => {
                let p = 2 * eta as i32;
                p as f64 * c.powi(p) * z.powi(p - 1)
            }
            Family::StudentT(nu) => (nu + 1.0) * c * z / (nu + c * z * z),
        }
    }

    /// Derivative of the score; not available for the Laplace density.
    pub fn score_derivative(&self, z: f64) -> Result<f64> {
        let c = self.std_constant;
        Ok(match self.family {
            Family::Gaussian => c,
            Family::Laplace => {
                return Err(Error::UnsupportedScoreDerivative {
                    family: self.family.to_string(),
                })
            }
            Family::Logistic => {
                let sech = 1.0 / (0.5 * c.sqrt() * z).cosh();
                0.5 * c * sech * sech
            }
            Family::PowerExponential(eta) => {
                let p = 2 * eta as i32;
                (p * (p - 1)) as f64 * c.powi(p) * z.powi(p - 2)
            }
            Family::StudentT(nu) => {
                let q = nu + c * z * z;
                (nu + 1.0) * c * (nu - c * z * z) / (q * q)
            }
        })
    }

    /// Derivative of the density, `-score(z) * density(z)`.
    pub fn density_derivative(&self, z: f64) -> f64 {
        -self.score(z) * self.density(z)
    }

    /// Closed-form information quantities.
    pub fn information_set(&self) -> InformationSet {
        let c = self.std_constant;
        let (i, j, k) = match self.family {
            Family::Gaussian => (c, 3.0, 15.0 / c),
            Family::Laplace => (1.0 / (c * c), 2.0, 24.0 * c * c),
            Family::Logistic => {
                let pi2 = PI * PI;
                (
                    c / 3.0,
                    (12.0 + pi2) / 9.0,
                    pi2 * (120.0 + 7.0 * pi2) / (45.0 * c),
                )
            }
            Family::PowerExponential(eta) => {
                let e = eta as f64;
                let base = gamma(1.0 + 1.0 / (2.0 * e));
                (
                    2.0 * e * c * c * gamma(2.0 - 1.0 / (2.0 * e)) / base,
                    2.0 * e + 1.0,
                    2.0 * e * gamma(2.0 + 3.0 / (2.0 * e)) / (c * c * base),
                )
            }
            Family::StudentT(nu) => (
                c * (nu + 1.0) / (nu + 3.0),
                3.0 * (nu + 1.0) / (nu + 3.0),
                15.0 * nu * (nu + 1.0) / (c * (nu - 2.0) * (nu + 3.0)),
            ),
        };
        InformationSet::from_ijk(i, j, k)
    }

    /// Information quantities computed by quadrature, independent of the
    /// closed forms.
    pub fn information_set_by_quadrature(&self) -> Result<InformationSet> {
        let opts = QuadOptions::default();
        let weighted = |power: i32| {
            numerics::integrate_even(
                |z| {
                    let f = self.density(z);
                    if f == 0.0 {
                        return 0.0;
                    }
                    let s = self.score(z);
                    z.powi(power) * s * s * f
                },
                opts,
            )
        };
        Ok(InformationSet::from_ijk(
            weighted(0)?,
            weighted(2)?,
            weighted(4)?,
        ))
    }

    /// Moment of order `k` (1 to 6), absolute if requested.
    pub fn moment(&self, k: u32, absolute: bool) -> Result<f64> {
        if !(1..=6).contains(&k) {
            return Err(Error::InvalidParameter(format!(
                "moment order must be in 1..=6, got {k}"
            )));
        }
        if let Family::StudentT(nu) = self.family {
            if k as f64 >= nu {
                return Err(Error::MomentDoesNotExist {
                    order: k,
                    family: self.family.to_string(),
                });
            }
        }
        if !absolute && k % 2 == 1 {
            return Ok(0.0);
        }
        numerics::integrate_even(
            |z| {
                let f = self.density(z);
                if f == 0.0 {
                    0.0
                } else {
                    z.abs().powi(k as i32) * f
                }
            },
            QuadOptions::default(),
        )
    }

    /// One draw from the density.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let c = self.std_constant;
        match self.family {
            Family::Gaussian => {
                let z: f64 = StandardNormal.sample(rng);
                z / c.sqrt()
            }
            Family::Laplace => {
                let e: f64 = Exp1.sample(rng);
                if rng.random::<bool>() {
                    c * e
                } else {
                    -c * e
                }
            }
            Family::Logistic => {
                let u: f64 = rng.random_range(f64::EPSILON..1.0);
                (u / (1.0 - u)).ln() / c.sqrt()
            }
            Family::PowerExponential(eta) => {
                let p = 2.0 * eta as f64;
                let g = Gamma::new(1.0 / p, 1.0).expect("valid gamma shape");
                let r = g.sample(rng).powf(1.0 / p) / c;
                if rng.random::<bool>() {
                    r
                } else {
                    -r
                }
            }
            Family::StudentT(nu) => {
                let t = StudentT::new(nu).expect("valid degrees of freedom");
                t.sample(rng) / c.sqrt()
            }
        }
    }
}

impl SymmetricDensity for ReferenceDensity {
    fn density(&self, z: f64) -> f64 {
        ReferenceDensity::density(self, z)
    }
    fn score(&self, z: f64) -> f64 {
        ReferenceDensity::score(self, z)
    }
    fn score_derivative(&self, z: f64) -> Result<f64> {
        ReferenceDensity::score_derivative(self, z)
    }
    fn tails(&self) -> TailBehaviour {
        match self.family {
            Family::Gaussian => TailBehaviour {
                density_power: None,
                score_growth: 1.0,
                score_derivative_growth: 0.0,
            },
            Family::Laplace | Family::Logistic => TailBehaviour {
                density_power: None,
                score_growth: 0.0,
                score_derivative_growth: f64::NEG_INFINITY,
            },
            Family::PowerExponential(eta) => TailBehaviour {
                density_power: None,
                score_growth: 2.0 * eta as f64 - 1.0,
                score_derivative_growth: 2.0 * eta as f64 - 2.0,
            },
            Family::StudentT(nu) => TailBehaviour {
                density_power: Some(nu + 1.0),
                score_growth: -1.0,
                score_derivative_growth: -2.0,
            },
        }
    }
    fn describe(&self) -> String {
        self.family.to_string()
    }
}

/// A symmetric density rescaled as `z -> s f(s z)`. Used to express the same
/// shape under another scale functional, e.g. unit variance instead of unit
/// median absolute deviation.
#[derive(Debug, Clone, Copy)]
pub struct Rescaled<D> {
    pub base: D,
    pub factor: f64,
}

impl<D: SymmetricDensity> Rescaled<D> {
    pub fn new(base: D, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "rescaling factor must be positive, got {factor}"
            )));
        }
        Ok(Self { base, factor })
    }
}

impl ReferenceDensity {
    /// The same shape scaled to unit variance.
    pub fn unit_variance(self) -> Result<Rescaled<ReferenceDensity>> {
        let var = self.moment(2, false)?;
        Rescaled::new(self, var.sqrt())
    }
}

impl<D: SymmetricDensity> SymmetricDensity for Rescaled<D> {
    fn density(&self, z: f64) -> f64 {
        self.factor * self.base.density(self.factor * z)
    }
    fn score(&self, z: f64) -> f64 {
        self.factor * self.base.score(self.factor * z)
    }
    fn score_derivative(&self, z: f64) -> Result<f64> {
        Ok(self.factor * self.factor * self.base.score_derivative(self.factor * z)?)
    }
    fn tails(&self) -> TailBehaviour {
        self.base.tails()
    }
    fn describe(&self) -> String {
        format!("{} rescaled by {}", self.base.describe(), self.factor)
    }
}
