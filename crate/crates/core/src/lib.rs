//! Obstacle problems for functionals with generalized Orlicz growth on
//! uniform grids, with empirical checks of the structural conditions and of
//! the regularity estimates satisfied by their minimizers.
//!
//! [`phi`] holds the integrands and their condition checkers, [`grid`] the
//! lattices, fields and norms, [`solver`] the discrete minimizer,
//! [`capacity`] relative capacities and boundary fatness, and
//! [`diagnostics`] the Caccioppoli, higher-integrability and boundary
//! continuity reports.

// `!(x > 0.0)` is used on purpose: it rejects NaN along with the bad values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod capacity;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod io;
pub mod phi;
pub mod solver;

pub use error::{Error, Result};
