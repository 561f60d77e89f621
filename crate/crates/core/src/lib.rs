//! Hybrid choice model with reference-dependent utility, estimated by
//! composite marginal likelihood.

pub mod cml;
pub mod datamodel;
pub mod design;
pub mod error;
pub mod estimator;
pub mod gaussian;
pub mod modelspec;
mod rng;
pub mod simulate;
pub mod wtp;

pub use datamodel::{Alternative, AlternativeProfile, ChoiceTask, Dataset, Demographics, Respondent};
pub use error::{Error, Result};
pub use modelspec::{Model, ModelSpec, ParameterVector};
