//! Error type shared by every module of the crate.

use thiserror::Error;

/// Everything that can go wrong while building densities, computing
/// statistics, or running simulations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("cannot parse {what} from `{token}`: {reason}")]
    Parse {
        what: &'static str,
        token: String,
        reason: String,
    },

    #[error("the {family} reference density has no usable score derivative")]
    UnsupportedScoreDerivative { family: String },

    #[error("moment of order {order} does not exist for the {family} density")]
    MomentDoesNotExist { order: u32, family: String },

    #[error("skewness parameter {xi} is too large for the {family} model: {reason}")]
    XiTooLarge {
        xi: f64,
        family: String,
        reason: String,
    },

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("estimated variance of {statistic} is not positive ({value})")]
    NonPositiveVariance { statistic: &'static str, value: f64 },

    #[error("zero denominator while computing {0}")]
    ZeroDenominator(&'static str),

    #[error("divergent integral: {0}")]
    DivergentIntegral(String),

    #[error("the reference test has zero shift, so the efficiency ratio is undefined")]
    ZeroShift,

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("invalid simulation specification: {0}")]
    InvalidSpec(String),
}

pub type Result<T> = std::result::Result<T, Error>;
