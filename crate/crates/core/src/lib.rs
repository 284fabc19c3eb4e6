//! Bayesian inference for the planted bi-section model: a stochastic block
//! model with two communities of arbitrary (possibly zero) size.
//!
//! The crate covers graph sampling, exact posteriors by enumeration of the
//! canonical labelings, a single-flip Metropolis sampler, credible and
//! confidence sets, posterior-odds tests, and finite-`n` evaluation of the
//! posterior concentration bounds together with Monte Carlo harnesses that
//! check them.

pub mod bounds;
pub mod error;
pub mod experiments;
pub mod inference;
pub mod math;
pub mod model;
pub mod posterior;
pub mod priors;
pub mod rng;

pub use error::{Error, Result};
pub use model::{EdgeModel, Graph, LabelVector};
pub use posterior::{exact_posterior, LabelSet, PosteriorTable};
pub use priors::PriorSpec;
