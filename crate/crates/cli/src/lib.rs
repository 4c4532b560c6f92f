//! Config-driven experiment runner for the `orlicz-obstacle` library.

// `!(x > 0.0)` is used on purpose: it rejects NaN along with the bad values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiment;
pub mod expr;

pub use config::ExperimentConfig;
pub use experiment::{Outcome, RunOptions, Status};
