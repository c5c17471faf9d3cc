//! Symmetry test statistics, the central sequence of the skewed model, and
//! normal p-values.
//!
//! All statistics are asymptotically standard normal under symmetry, and
//! large positive values point toward right skewness.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{self, Discretization, NuisanceEstimates};
use crate::numerics::{normal_quantile, normal_sf};
use crate::reference::{Family, ReferenceDensity};

/// Identifier of a test statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TestId {
    S1,
    #[serde(rename = "S2_b1")]
    S2B1,
    #[serde(rename = "T_f1")]
    TF1,
    #[serde(rename = "T_hat_f1")]
    THatF1,
    #[serde(rename = "T_circ_f1")]
    TCircF1,
    #[serde(rename = "T_dagger")]
    TDagger,
    #[serde(rename = "T_laplace")]
    TLaplace,
    #[serde(rename = "T_logistic")]
    TLogistic,
    #[serde(rename = "VdW")]
    VdW,
}

impl fmt::Display for TestId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("unit variant serializes");
        write!(f, "{}", s.as_str().unwrap_or_default())
    }
}

/// Which tail of the null distribution counts as evidence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sidedness {
    /// Reject for large positive values.
    One,
    Two,
}

impl FromStr for Sidedness {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one" | "one-sided" => Ok(Sidedness::One),
            "two" | "two-sided" => Ok(Sidedness::Two),
            _ => Err(Error::Parse {
                what: "sidedness",
                token: s.to_string(),
                reason: "expected `one` or `two`".into(),
            }),
        }
    }
}

/// Result of one test on one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub test_id: TestId,
    pub statistic: f64,
    pub p_one_sided: f64,
    pub p_two_sided: f64,
    #[serde(flatten)]
    pub nuisance: NuisanceEstimates,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_family: Option<Family>,
    /// Sample coefficient of skewness, reported alongside the S2 statistic.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b1: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl TestOutcome {
    fn new(test_id: TestId, statistic: f64, theta: f64, sigma: Option<f64>) -> Self {
        let (p_one_sided, p_two_sided) = p_values(statistic);
        Self {
            test_id,
            statistic,
            p_one_sided,
            p_two_sided,
            nuisance: NuisanceEstimates {
                theta_hat: theta,
                sigma_hat: sigma,
                lattice_constant: None,
            },
            reference_family: None,
            b1: None,
            warnings: Vec::new(),
        }
    }

    fn with_family(mut self, family: Family) -> Self {
        self.reference_family = Some(family);
        self
    }

    pub fn p_value(&self, sidedness: Sidedness) -> f64 {
        match sidedness {
            Sidedness::One => self.p_one_sided,
            Sidedness::Two => self.p_two_sided,
        }
    }

    /// Level-`alpha` decision based on the normal critical values.
    pub fn rejects(&self, alpha: f64, sidedness: Sidedness) -> bool {
        match sidedness {
            Sidedness::One => self.statistic > normal_quantile(1.0 - alpha),
            Sidedness::Two => self.statistic.abs() > normal_quantile(1.0 - 0.5 * alpha),
        }
    }
}

/// One- and two-sided standard normal p-values of a statistic.
pub fn p_values(statistic: f64) -> (f64, f64) {
    let one = normal_sf(statistic);
    (one, 2.0 * one.min(1.0 - one))
}

/// The three components of the central sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CentralSequence {
    pub delta_loc: f64,
    pub delta_scale: f64,
    pub delta_skew: f64,
}

fn check_scale(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "scale must be positive, got {sigma}"
        )))
    }
}

fn root_n(x: &[f64]) -> f64 {
    (x.len() as f64).sqrt()
}

pub fn central_sequence(
    x: &[f64],
    theta: f64,
    sigma: f64,
    f1: &ReferenceDensity,
) -> Result<CentralSequence> {
    check_scale(sigma)?;
    let kappa = f1.information_set().kappa;
    let (mut loc, mut scale, mut skew) = (0.0, 0.0, 0.0);
    for &xi in x {
        let z = (xi - theta) / sigma;
        let s = f1.score(z);
        loc += s;
        scale += s * z - 1.0;
        skew += s * (z * z - kappa);
    }
    let r = root_n(x);
    Ok(CentralSequence {
        delta_loc: loc / (r * sigma),
        delta_scale: scale / (r * sigma),
        delta_skew: skew / r,
    })
}

/// Third moment over the root of the sixth, both about `theta`.
pub fn s1(x: &[f64], theta: f64) -> Result<TestOutcome> {
    let m3 = estimators::empirical_moment(x, 3, theta);
    let m6 = estimators::empirical_moment(x, 6, theta);
    if m6 <= 0.0 {
        return Err(Error::DegenerateSample(
            "sixth moment about theta is zero".into(),
        ));
    }
    Ok(TestOutcome::new(
        TestId::S1,
        root_n(x) * m3 / m6.sqrt(),
        theta,
        None,
    ))
}

/// Studentized sample skewness with moments about the mean; the skewness
/// coefficient itself is reported as `b1`.
pub fn s2_b1(x: &[f64]) -> Result<TestOutcome> {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let m2 = estimators::empirical_moment(x, 2, mean);
    let m3 = estimators::empirical_moment(x, 3, mean);
    let m4 = estimators::empirical_moment(x, 4, mean);
    let m6 = estimators::empirical_moment(x, 6, mean);
    let denom = m6 - 6.0 * m2 * m4 + 9.0 * m2 * m2 * m2;
    if !(denom > 0.0) || m2 <= 0.0 {
        return Err(Error::DegenerateSample(
            "variance estimate of the skewness is not positive".into(),
        ));
    }
    let mut out = TestOutcome::new(TestId::S2B1, root_n(x) * m3 / denom.sqrt(), mean, None);
    out.b1 = Some(m3 / m2.powf(1.5));
    Ok(out)
}

/// Optimal statistic at `f1` with known information constants.
pub fn t_f1(x: &[f64], theta: f64, sigma: f64, f1: &ReferenceDensity) -> Result<TestOutcome> {
    check_scale(sigma)?;
    let info = f1.information_set();
    let sum: f64 = x
        .iter()
        .map(|&xi| {
            let z = (xi - theta) / sigma;
            f1.score(z) * (z * z - info.kappa)
        })
        .sum();
    let stat = sum / (x.len() as f64 * info.gamma).sqrt();
    Ok(TestOutcome::new(TestId::TF1, stat, theta, Some(sigma)).with_family(f1.family))
}

/// Empirical counterparts of the information quantities of `f1`.
struct EmpiricalInformation {
    i_loc: f64,
    j_scale: f64,
    k_skew: f64,
    score_skew_sum: f64,
}

fn empirical_information(
    x: &[f64],
    theta: f64,
    sigma: f64,
    f1: &ReferenceDensity,
    kappa: impl Fn(&[f64]) -> Result<f64>,
) -> Result<(EmpiricalInformation, f64)> {
    check_scale(sigma)?;
    let z: Vec<f64> = x.iter().map(|&xi| (xi - theta) / sigma).collect();
    let kappa = kappa(&z)?;
    let n = z.len() as f64;
    let mut e = EmpiricalInformation {
        i_loc: 0.0,
        j_scale: 0.0,
        k_skew: 0.0,
        score_skew_sum: 0.0,
    };
    for &zi in &z {
        let s = f1.score(zi);
        let s2 = s * s;
        let z2 = zi * zi;
        e.i_loc += s2;
        e.j_scale += z2 * s2;
        e.k_skew += z2 * z2 * s2;
        e.score_skew_sum += s * (z2 - kappa);
    }
    e.i_loc /= n;
    e.j_scale /= n;
    e.k_skew /= n;
    Ok((e, kappa))
}

fn studentized(
    id: TestId,
    statistic_name: &'static str,
    x: &[f64],
    theta: f64,
    sigma: f64,
    f1: &ReferenceDensity,
    e: &EmpiricalInformation,
    kappa: f64,
) -> Result<TestOutcome> {
    let gamma = e.k_skew - 2.0 * kappa * e.j_scale + kappa * kappa * e.i_loc;
    if !(gamma > 0.0) {
        return Err(Error::NonPositiveVariance {
            statistic: statistic_name,
            value: gamma,
        });
    }
    let stat = e.score_skew_sum / (x.len() as f64 * gamma).sqrt();
    Ok(TestOutcome::new(id, stat, theta, Some(sigma)).with_family(f1.family))
}

/// Optimal statistic at `f1` with an empirically studentized variance and
/// the centring constant of `f1`.
pub fn t_hat_f1(x: &[f64], theta: f64, sigma_hat: f64, f1: &ReferenceDensity) -> Result<TestOutcome> {
    let kappa = f1.information_set().kappa;
    let (e, kappa) = empirical_information(x, theta, sigma_hat, f1, |_| Ok(kappa))?;
    studentized(TestId::THatF1, "T_hat_f1", x, theta, sigma_hat, f1, &e, kappa)
}

fn kappa_circ_standardized(z: &[f64], f1: &ReferenceDensity) -> Result<f64> {
    let n = z.len() as f64;
    let mut i_sum = 0.0;
    let mut j_sum = 0.0;
    for &zi in z {
        let d = f1.score_derivative(zi)?;
        i_sum += d;
        j_sum += 2.0 * zi * f1.score(zi) + zi * zi * d;
    }
    let i = i_sum / n;
    if i == 0.0 {
        return Err(Error::ZeroDenominator("the adaptive centring constant"));
    }
    Ok((j_sum / n) / i)
}

/// Consistent estimate of the centring constant that makes the skewness
/// score orthogonal to the location score under any symmetric density.
pub fn kappa_circ(x: &[f64], theta: f64, sigma: f64, f1: &ReferenceDensity) -> Result<f64> {
    check_scale(sigma)?;
    let z: Vec<f64> = x.iter().map(|&xi| (xi - theta) / sigma).collect();
    kappa_circ_standardized(&z, f1)
}

/// Statistic built on `f1` that stays valid under every symmetric density
/// with finite required moments. The logistic version has its own identifier.
pub fn t_circ_f1(x: &[f64], theta: f64, sigma_hat: f64, f1: &ReferenceDensity) -> Result<TestOutcome> {
    let (e, kappa) = empirical_information(x, theta, sigma_hat, f1, |z| {
        kappa_circ_standardized(z, f1)
    })?;
    let id = if f1.family == Family::Logistic {
        TestId::TLogistic
    } else {
        TestId::TCircF1
    };
    studentized(id, "T_circ_f1", x, theta, sigma_hat, f1, &e, kappa)
}

/// Scale-free pseudo-Gaussian statistic.
pub fn t_dagger(x: &[f64], theta: f64) -> Result<TestOutcome> {
    let m2 = estimators::empirical_moment(x, 2, theta);
    let m4 = estimators::empirical_moment(x, 4, theta);
    let m6 = estimators::empirical_moment(x, 6, theta);
    let gamma = m6 - 6.0 * m2 * m4 + 9.0 * m2 * m2 * m2;
    if !(gamma > 0.0) {
        return Err(Error::NonPositiveVariance {
            statistic: "T_dagger",
            value: gamma,
        });
    }
    let sum: f64 = x
        .iter()
        .map(|&xi| {
            let y = xi - theta;
            y * (y * y - 3.0 * m2)
        })
        .sum();
    let stat = sum / (x.len() as f64 * gamma).sqrt();
    Ok(TestOutcome::new(TestId::TDagger, stat, theta, None))
}

/// Sign-score statistic built on the Laplace density, with the centring
/// constant estimated through a kernel estimate of the residual density at 0.
pub fn t_laplace(x: &[f64], theta: f64, sigma_hat: f64) -> Result<TestOutcome> {
    check_scale(sigma_hat)?;
    let z: Vec<f64> = x.iter().map(|&xi| (xi - theta) / sigma_hat).collect();
    let n = z.len() as f64;
    let density_at_zero = estimators::kde_at_zero(&z)?;
    let abs_mean = z.iter().map(|v| v.abs()).sum::<f64>() / n;
    let kappa = abs_mean / density_at_zero;
    let m2 = z.iter().map(|v| v * v).sum::<f64>() / n;
    let m4 = z.iter().map(|v| v.powi(4)).sum::<f64>() / n;
    let gamma = m4 - 2.0 * m2 * kappa + kappa * kappa;
    if !(gamma > 0.0) {
        return Err(Error::NonPositiveVariance {
            statistic: "T_laplace",
            value: gamma,
        });
    }
    let sum: f64 = z
        .iter()
        .map(|&v| {
            let sign = if v > 0.0 {
                1.0
            } else if v < 0.0 {
                -1.0
            } else {
                0.0
            };
            sign * (v * v - kappa)
        })
        .sum();
    let stat = sum / (n * gamma).sqrt();
    Ok(TestOutcome::new(TestId::TLaplace, stat, theta, Some(sigma_hat)).with_family(Family::Laplace))
}

/// Normal score attached to an absolute rank among `n`.
pub fn vdw_score(rank: f64, n: usize) -> f64 {
    let n1 = n as f64 + 1.0;
    normal_quantile((n1 + rank) / (2.0 * n1))
}

/// Ranks of `values` with ties receiving their average rank.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Signed-rank statistic with van der Waerden scores; distribution-free under
/// symmetry about the specified `theta`.
pub fn vdw_signed_rank(x: &[f64], theta: f64) -> Result<TestOutcome> {
    let n = x.len();
    let dev: Vec<f64> = x.iter().map(|&xi| xi - theta).collect();
    let abs: Vec<f64> = dev.iter().map(|d| d.abs()).collect();
    let ranks = average_ranks(&abs);
    let weight = |r: f64| {
        let s = vdw_score(r, n);
        s * (s * s - 3.0)
    };
    let gamma = (1..=n).map(|r| weight(r as f64).powi(2)).sum::<f64>() / n as f64;
    let sum: f64 = dev
        .iter()
        .zip(&ranks)
        .map(|(&d, &r)| {
            if d > 0.0 {
                weight(r)
            } else if d < 0.0 {
                -weight(r)
            } else {
                0.0
            }
        })
        .sum();
    let mut out = TestOutcome::new(TestId::VdW, sum / (n as f64 * gamma).sqrt(), theta, None);
    let ties = dev.iter().filter(|&&d| d == 0.0).count();
    if ties > 0 {
        out.warnings
            .push(format!("{ties} observation(s) equal theta and were given sign 0"));
    }
    Ok(out)
}

/// The statistic a test configuration computes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "f1", rename_all = "snake_case")]
pub enum TestKind {
    S1,
    S2B1,
    TF1(Family),
    THat(Family),
    TCirc(Family),
    TDagger,
    TLaplace,
    VdW,
}

impl TestKind {
    fn uses_scale(&self) -> bool {
        matches!(
            self,
            TestKind::TF1(_) | TestKind::THat(_) | TestKind::TCirc(_) | TestKind::TLaplace
        )
    }

    fn family(&self) -> Option<Family> {
        match *self {
            TestKind::TF1(f) | TestKind::THat(f) | TestKind::TCirc(f) => Some(f),
            TestKind::TLaplace => Some(Family::Laplace),
            _ => None,
        }
    }

    /// The statistic is computed at lattice-rounded estimates when estimated.
    fn discretizes(&self) -> bool {
        self.uses_scale()
    }
}

impl FromStr for TestKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let token = s.trim();
        let (head, arg) = match token.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (token, None),
        };
        let family = |default: Family| -> Result<Family> {
            match arg {
                Some(a) => a.parse(),
                None => Ok(default),
            }
        };
        let kind = match head {
            "s1" => TestKind::S1,
            "s2" | "b1" => TestKind::S2B1,
            "tf1" => TestKind::TF1(family(Family::Gaussian)?),
            "that" => TestKind::THat(family(Family::Gaussian)?),
            "tcirc" => TestKind::TCirc(family(Family::Gaussian)?),
            "tdagger" => TestKind::TDagger,
            "laplace" => TestKind::TLaplace,
            "logistic" => TestKind::TCirc(Family::Logistic),
            "vdw" => TestKind::VdW,
            _ => {
                return Err(Error::Parse {
                    what: "test name",
                    token: token.to_string(),
                    reason: "expected one of s1, s2, tf1[:family], that[:family], tcirc[:family], tdagger, laplace, logistic, vdw".into(),
                })
            }
        };
        Ok(kind)
    }
}

/// How the location parameter is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocationChoice {
    Specified,
    Median,
    Mean,
}

/// A statistic together with its nuisance-parameter policy and sidedness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    pub kind: TestKind,
    pub location: LocationChoice,
    pub sidedness: Sidedness,
}

impl TestConfig {
    pub fn new(kind: TestKind, location: LocationChoice, sidedness: Sidedness) -> Self {
        Self {
            kind,
            location,
            sidedness,
        }
    }

    /// Short human-readable label such as `T_laplace(median)`.
    pub fn label(&self) -> String {
        let name = match self.kind {
            TestKind::S1 => "S1".to_string(),
            TestKind::S2B1 => "b1".to_string(),
            TestKind::TF1(f) => format!("T_f1[{f}]"),
            TestKind::THat(f) => format!("T_hat[{f}]"),
            TestKind::TCirc(Family::Logistic) => "T_logistic".to_string(),
            TestKind::TCirc(f) => format!("T_circ[{f}]"),
            TestKind::TDagger => "T_dagger".to_string(),
            TestKind::TLaplace => "T_laplace".to_string(),
            TestKind::VdW => "VdW".to_string(),
        };
        if self.kind == TestKind::S2B1 {
            return name;
        }
        let loc = match self.location {
            LocationChoice::Specified => "theta",
            LocationChoice::Median => "median",
            LocationChoice::Mean => "mean",
        };
        format!("{name}({loc})")
    }

    /// Runs the configured statistic. `theta` is the specified location,
    /// required when the configuration asks for it.
    pub fn run(
        &self,
        x: &[f64],
        theta: Option<f64>,
        discretization: Discretization,
    ) -> Result<TestOutcome> {
        let n = x.len();
        let lattice = self.kind.discretizes() && discretization.enabled;
        let location = match self.location {
            LocationChoice::Specified => theta.ok_or_else(|| {
                Error::InvalidParameter(format!("{} needs a specified location", self.label()))
            })?,
            LocationChoice::Median => {
                let m = estimators::median(x);
                if lattice {
                    discretization.apply(m, n)
                } else {
                    m
                }
            }
            LocationChoice::Mean => {
                let m = x.iter().sum::<f64>() / n as f64;
                if lattice {
                    discretization.apply(m, n)
                } else {
                    m
                }
            }
        };
        let sigma = if self.kind.uses_scale() {
            let raw = estimators::mad_scale(x, location)?;
            // The scale enters the Gaussian statistics only through ratios
            // that do not need a lattice, so it is left as is there.
            let gaussian = self.kind.family() == Some(Family::Gaussian);
            Some(if lattice && !gaussian {
                discretization.apply(raw, n)
            } else {
                raw
            })
        } else {
            None
        };
        let reference = |f: Family| ReferenceDensity::new(f);
        let mut out = match self.kind {
            TestKind::S1 => s1(x, location)?,
            TestKind::S2B1 => s2_b1(x)?,
            TestKind::TF1(f) => t_f1(x, location, sigma.expect("scale"), &reference(f)?)?,
            TestKind::THat(f) => t_hat_f1(x, location, sigma.expect("scale"), &reference(f)?)?,
            TestKind::TCirc(f) => t_circ_f1(x, location, sigma.expect("scale"), &reference(f)?)?,
            TestKind::TDagger => t_dagger(x, location)?,
            TestKind::TLaplace => t_laplace(x, location, sigma.expect("scale"))?,
            TestKind::VdW => vdw_signed_rank(x, location)?,
        };
        if lattice && self.location != LocationChoice::Specified {
            out.nuisance.lattice_constant = Some(discretization.c);
        } else if lattice && sigma.is_some() && self.kind.family() != Some(Family::Gaussian) {
            out.nuisance.lattice_constant = Some(discretization.c);
        }
        Ok(out)
    }
}
