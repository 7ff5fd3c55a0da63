//! Bayesian variable selection for generalized linear models under
//! concentrated- and diffuse-reference power-expected-posterior priors,
//! sampled by Gibbs variable selection, with g-prior comparators.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod data;
pub mod error;
pub mod glm;
pub mod io;
pub mod laplace;
pub mod model;
pub mod priors;
pub mod quadrature;
pub mod sampler;
pub mod sim;
pub mod summary;

pub use data::Dataset;
pub use error::{Error, Result};
pub use glm::{FitResult, GlmFamily, ObsWeights};
pub use model::ModelIndicator;
