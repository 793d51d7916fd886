//! Unbiased derivatives of programs with discrete randomness.
//!
//! Programs are written once against [`backend::Backend`] and can then be run
//! on plain reals, on stochastic triples (value, infinitesimal part, one
//! pruned finite jump), on smoothed duals, or with score-function tracing.

pub mod backend;
pub mod cli;
pub mod dist;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod report;
pub mod rng;
pub mod smoothing;
pub mod triple;

pub use error::{Error, Result};
