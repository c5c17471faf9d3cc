//! Locally optimal tests of univariate symmetry against Edgeworth-type skewed
//! alternatives.
//!
//! The crate provides the standardized reference densities, the skewed model
//! family built on them, the test statistics with their nuisance estimators,
//! asymptotic shift and efficiency calculators, samplers for skew-normal and
//! skew-t alternatives, and a deterministic parallel Monte Carlo harness.

pub mod alternatives;
pub mod cli;
pub mod edgeworth;
pub mod efficiency;
pub mod error;
pub mod estimators;
pub mod numerics;
pub mod reference;
pub mod simulation;
pub mod statistics;

pub use edgeworth::{EdgeworthModel, ModelSpec};
pub use error::{Error, Result};
pub use reference::{Family, InformationSet, ReferenceDensity};
