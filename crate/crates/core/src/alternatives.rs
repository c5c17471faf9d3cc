//! Skew-normal and skew-t alternatives in the direct parameterization, with
//! density `2 f(x) F(lambda x)` and its Student analogue.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::numerics::{normal_cdf, normal_pdf};
use crate::reference::student_cdf;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SkewAlternative {
    SkewNormal { lambda: f64 },
    SkewT { nu: f64, lambda: f64 },
}

impl SkewAlternative {
    pub fn skew_normal(lambda: f64) -> Result<Self> {
        let alt = SkewAlternative::SkewNormal { lambda };
        alt.validate()?;
        Ok(alt)
    }

    pub fn skew_t(nu: f64, lambda: f64) -> Result<Self> {
        let alt = SkewAlternative::SkewT { nu, lambda };
        alt.validate()?;
        Ok(alt)
    }

    pub fn validate(&self) -> Result<()> {
        let (nu, lambda) = match *self {
            SkewAlternative::SkewNormal { lambda } => (None, lambda),
            SkewAlternative::SkewT { nu, lambda } => (Some(nu), lambda),
        };
        if !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "skewness parameter must be finite, got {lambda}"
            )));
        }
        if let Some(nu) = nu {
            if !(nu > 0.0 && nu.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "degrees of freedom must be positive, got {nu}"
                )));
            }
        }
        Ok(())
    }

    pub fn lambda(&self) -> f64 {
        match *self {
            SkewAlternative::SkewNormal { lambda } | SkewAlternative::SkewT { lambda, .. } => {
                lambda
            }
        }
    }

    fn delta(&self) -> f64 {
        let l = self.lambda();
        l / (1.0 + l * l).sqrt()
    }

    pub fn density(&self, x: f64) -> f64 {
        match *self {
            SkewAlternative::SkewNormal { lambda } => 2.0 * normal_pdf(x) * normal_cdf(lambda * x),
            SkewAlternative::SkewT { nu, lambda } => {
                let log_t = ln_gamma(0.5 * (nu + 1.0))
                    - ln_gamma(0.5 * nu)
                    - 0.5 * (nu * PI).ln()
                    - 0.5 * (nu + 1.0) * (1.0 + x * x / nu).ln();
                let arg = lambda * x * ((nu + 1.0) / (nu + x * x)).sqrt();
                2.0 * log_t.exp() * student_cdf(nu + 1.0, arg)
            }
        }
    }

    /// Population mean; infinite for skew-t with at most one degree of freedom.
    pub fn mean(&self) -> f64 {
        let base = self.delta() * (2.0 / PI).sqrt();
        match *self {
            SkewAlternative::SkewNormal { .. } => base,
            SkewAlternative::SkewT { nu, .. } => {
                if nu <= 1.0 {
                    if base == 0.0 {
                        return 0.0;
                    }
                    return f64::INFINITY.copysign(base);
                }
                base * (0.5 * nu).sqrt()
                    * (ln_gamma(0.5 * (nu - 1.0)) - ln_gamma(0.5 * nu)).exp()
            }
        }
    }

    /// Whether the alternative is a symmetric null.
    pub fn is_symmetric(&self) -> bool {
        self.lambda() == 0.0
    }

    /// One draw via the half-normal conditioning representation, divided by
    /// an independent `sqrt(chi2 / nu)` for the Student version.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let delta = self.delta();
        let u0: f64 = StandardNormal.sample(rng);
        let u1: f64 = StandardNormal.sample(rng);
        let sn = delta * u0.abs() + (1.0 - delta * delta).sqrt() * u1;
        match *self {
            SkewAlternative::SkewNormal { .. } => sn,
            SkewAlternative::SkewT { nu, .. } => {
                let chi = ChiSquared::new(nu).expect("validated degrees of freedom");
                let w: f64 = chi.sample(rng);
                sn / (w / nu).sqrt()
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        (0..n).map(|_| self.draw(rng)).collect()
    }
}

impl fmt::Display for SkewAlternative {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SkewAlternative::SkewNormal { lambda } => write!(f, "skewnormal:{lambda}"),
            SkewAlternative::SkewT { nu, lambda } => write!(f, "skewt:{nu}:{lambda}"),
        }
    }
}

impl FromStr for SkewAlternative {
    type Err = Error;

    /// Grammar: `skewnormal:<lambda>` or `skewt:<nu>:<lambda>`.
    fn from_str(s: &str) -> Result<Self> {
        let token = s.trim();
        let parts: Vec<&str> = token.split(':').collect();
        let number = |t: &str, what: &'static str| -> Result<f64> {
            t.trim().parse::<f64>().map_err(|_| Error::Parse {
                what,
                token: t.to_string(),
                reason: "not a number".into(),
            })
        };
        let bad = |reason: &str| Error::Parse {
            what: "skew alternative",
            token: token.to_string(),
            reason: reason.to_string(),
        };
        match parts.as_slice() {
            [head, lambda] if head.eq_ignore_ascii_case("skewnormal") => {
                SkewAlternative::skew_normal(number(lambda, "skew-normal lambda")?)
            }
            [head, nu, lambda] if head.eq_ignore_ascii_case("skewt") => {
                SkewAlternative::skew_t(number(nu, "skew-t nu")?, number(lambda, "skew-t lambda")?)
            }
            [head, ..] if head.eq_ignore_ascii_case("skewnormal") => {
                Err(bad("expected skewnormal:<lambda>"))
            }
            [head, ..] if head.eq_ignore_ascii_case("skewt") => {
                Err(bad("expected skewt:<nu>:<lambda>"))
            }
            _ => Err(bad("expected skewnormal:<lambda> or skewt:<nu>:<lambda>")),
        }
    }
}
