//! Cross-information integrals, asymptotic shifts of the test statistics
//! under local skewed alternatives, and Pitman efficiencies.
//!
//! Every test statistic has a `N(shift, 1)` limit under the local sequence
//! `xi = tau / sqrt(n)` built on a density `g1`. The shifts below are the
//! exact expressions of that mean.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{self, QuadOptions};
use crate::reference::{InformationSet, SymmetricDensity};

/// Integrals of products of the scores of `f1` and `g1` against `g1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossInformation {
    /// `int phi_f phi_g g`
    pub i_fg: f64,
    /// `int z^2 phi_f phi_g g`
    pub j_fg: f64,
    /// `int z^4 phi_f phi_g g`
    pub k_fg: f64,
    /// `int phi_f^2 g`
    pub i_gf: f64,
    /// `int z^2 phi_f^2 g`
    pub j_gf: f64,
    /// `int z^4 phi_f^2 g`
    pub k_gf: f64,
    pub kappa_fg: f64,
}

/// One integrand `z^power * phi_f^f_count * phi_g^g_count * g`.
struct Term {
    name: &'static str,
    power: i32,
    f_count: i32,
    g_count: i32,
}

const TERMS: [Term; 6] = [
    Term { name: "I_g(f1,g1)", power: 0, f_count: 1, g_count: 1 },
    Term { name: "J_g(f1,g1)", power: 2, f_count: 1, g_count: 1 },
    Term { name: "K_g(f1,g1)", power: 4, f_count: 1, g_count: 1 },
    Term { name: "I_g(f1)", power: 0, f_count: 2, g_count: 0 },
    Term { name: "J_g(f1)", power: 2, f_count: 2, g_count: 0 },
    Term { name: "K_g(f1)", power: 4, f_count: 2, g_count: 0 },
];

/// Polynomial growth of `z^power * phi_f^f_count * phi_g^g_count`, or `None`
/// when some factor vanishes exponentially.
fn growth<F: SymmetricDensity, G: SymmetricDensity>(term: &Term, f1: &F, g1: &G) -> Option<f64> {
    let (pf, pg) = (f1.tails().score_growth, g1.tails().score_growth);
    let total = term.power as f64 + term.f_count as f64 * pf + term.g_count as f64 * pg;
    total.is_finite().then_some(total)
}

/// Fails with `DivergentIntegral` when `g1` has polynomial tails too heavy for
/// one of the integrands. The reported moment is the highest one required.
fn check_admissible<F: SymmetricDensity, G: SymmetricDensity>(f1: &F, g1: &G) -> Result<()> {
    let Some(decay) = g1.tails().density_power else {
        return Ok(());
    };
    let worst = TERMS
        .iter()
        .filter_map(|t| growth(t, f1, g1).map(|order| (t, order)))
        .filter(|&(_, order)| order >= decay - 1.0)
        .max_by(|a, b| a.1.total_cmp(&b.1));
    match worst {
        None => Ok(()),
        Some((term, order)) => Err(Error::DivergentIntegral(format!(
            "{} for f1 = {} and g1 = {} needs the moment μ{} of g1, which is infinite \
             (moments exist only below order {})",
            term.name,
            f1.describe(),
            g1.describe(),
            format_order(order),
            format_order(decay - 1.0),
        ))),
    }
}

fn format_order(order: f64) -> String {
    if order.fract() == 0.0 {
        format!("{}", order as i64)
    } else {
        format!("{order}")
    }
}

fn integrate_term<F: SymmetricDensity, G: SymmetricDensity>(
    term: &Term,
    f1: &F,
    g1: &G,
) -> Result<f64> {
    numerics::integrate_even(
        |z| {
            let density = g1.density(z);
            if density == 0.0 {
                return 0.0;
            }
            z.powi(term.power)
                * f1.score(z).powi(term.f_count)
                * g1.score(z).powi(term.g_count)
                * density
        },
        QuadOptions::default(),
    )
}

pub fn cross_information<F: SymmetricDensity, G: SymmetricDensity>(
    f1: &F,
    g1: &G,
) -> Result<CrossInformation> {
    check_admissible(f1, g1)?;
    let mut values = [0.0; 6];
    for (v, term) in values.iter_mut().zip(TERMS.iter()) {
        *v = integrate_term(term, f1, g1)?;
    }
    let [i_fg, j_fg, k_fg, i_gf, j_gf, k_gf] = values;
    if i_fg == 0.0 {
        return Err(Error::ZeroDenominator("the cross centring constant"));
    }
    Ok(CrossInformation {
        i_fg,
        j_fg,
        k_fg,
        i_gf,
        j_gf,
        k_gf,
        kappa_fg: j_fg / i_fg,
    })
}

/// Information quantities of any symmetric density, by quadrature.
pub fn information<D: SymmetricDensity>(density: &D) -> Result<InformationSet> {
    let c = cross_information(density, density)?;
    Ok(InformationSet::from_ijk(c.i_gf, c.j_gf, c.k_gf))
}

/// Moment of order `k` of a symmetric density, absolute if requested.
pub fn moment<D: SymmetricDensity>(density: &D, k: u32, absolute: bool) -> Result<f64> {
    if let Some(decay) = density.tails().density_power {
        if k as f64 >= decay - 1.0 {
            return Err(Error::MomentDoesNotExist {
                order: k,
                family: density.describe(),
            });
        }
    }
    if !absolute && k % 2 == 1 {
        return Ok(0.0);
    }
    numerics::integrate_even(
        |z| {
            let f = density.density(z);
            if f == 0.0 {
                0.0
            } else {
                z.abs().powi(k as i32) * f
            }
        },
        QuadOptions::default(),
    )
}

fn positive_root(value: f64, what: &'static str) -> Result<f64> {
    if value > 0.0 {
        Ok(value.sqrt())
    } else {
        Err(Error::NonPositiveVariance {
            statistic: what,
            value,
        })
    }
}

/// Shift of the optimal statistic under its own density: `tau sqrt(gamma)`.
pub fn shift_t_f1<F: SymmetricDensity>(f1: &F, tau: f64) -> Result<f64> {
    Ok(tau * information(f1)?.gamma.sqrt())
}

/// Shift of the statistic studentized with the centring constant of `f1`.
pub fn shift_t_hat<F: SymmetricDensity, G: SymmetricDensity>(
    f1: &F,
    g1: &G,
    tau: f64,
) -> Result<f64> {
    let c = cross_information(f1, g1)?;
    let kappa_f = information(f1)?.kappa;
    let kappa_g = information(g1)?.kappa;
    let numerator = c.k_fg - c.j_fg * (kappa_f + kappa_g) + c.i_fg * kappa_f * kappa_g;
    let sd = positive_root(
        c.k_gf - 2.0 * c.j_gf * kappa_f + c.i_gf * kappa_f * kappa_f,
        "T_hat_f1",
    )?;
    Ok(tau * numerator / sd)
}

/// Shift of the statistic with the adaptively estimated centring constant.
pub fn shift_t_circ<F: SymmetricDensity, G: SymmetricDensity>(
    f1: &F,
    g1: &G,
    tau: f64,
) -> Result<f64> {
    let c = cross_information(f1, g1)?;
    let kappa = c.kappa_fg;
    let sd = positive_root(
        c.k_gf - 2.0 * c.j_gf * kappa + c.i_gf * kappa * kappa,
        "T_circ_f1",
    )?;
    Ok(tau * (c.k_fg - c.j_fg * kappa) / sd)
}

/// Shift of the third-moment statistic with specified location.
pub fn shift_s1<G: SymmetricDensity>(g1: &G, tau: f64) -> Result<f64> {
    let m2 = moment(g1, 2, false)?;
    let m4 = moment(g1, 4, false)?;
    let m6 = moment(g1, 6, false)?;
    let kappa_g = information(g1)?.kappa;
    Ok(tau * (5.0 * m4 - 3.0 * kappa_g * m2) / m6.sqrt())
}

/// Shift of the pseudo-Gaussian statistic.
pub fn shift_t_dagger<G: SymmetricDensity>(g1: &G, tau: f64) -> Result<f64> {
    let m2 = moment(g1, 2, false)?;
    let m4 = moment(g1, 4, false)?;
    let m6 = moment(g1, 6, false)?;
    let sd = positive_root(m6 - 6.0 * m2 * m4 + 9.0 * m2 * m2 * m2, "T_dagger")?;
    Ok(tau * (5.0 * m4 - 9.0 * m2 * m2) / sd)
}

/// Shift of the Laplace sign-score statistic, through absolute moments and
/// the value of `g1` at the origin.
pub fn shift_laplace<G: SymmetricDensity>(g1: &G, tau: f64) -> Result<f64> {
    let abs1 = moment(g1, 1, true)?;
    let abs3 = moment(g1, 3, true)?;
    let m2 = moment(g1, 2, false)?;
    let m4 = moment(g1, 4, false)?;
    let at_zero = g1.density(0.0);
    let kappa = abs1 / at_zero;
    let sd = positive_root(m4 - 2.0 * m2 * kappa + kappa * kappa, "T_laplace")?;
    Ok(tau * (4.0 * abs3 - 2.0 * abs1 * kappa) / sd)
}

/// Drift of the skewness component of the central sequence under a location
/// perturbation `theta -> theta + t / sqrt(n)`, for data from `g1`.
pub fn skew_location_drift<F: SymmetricDensity, G: SymmetricDensity>(
    f1: &F,
    g1: &G,
    sigma: f64,
    t: f64,
) -> Result<f64> {
    let c = cross_information(f1, g1)?;
    let kappa_f = information(f1)?.kappa;
    Ok(-t * (c.j_fg - kappa_f * c.i_fg) / sigma)
}

/// Pitman efficiency of test `a` relative to test `b`: `(shift_a / shift_b)^2`.
pub fn are(shift_a: f64, shift_b: f64) -> Result<f64> {
    if shift_b == 0.0 || !shift_b.is_finite() {
        return Err(Error::ZeroShift);
    }
    Ok((shift_a / shift_b).powi(2))
}
