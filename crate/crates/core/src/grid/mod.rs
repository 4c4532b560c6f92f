//! Uniform lattices, rasterised domains, grid fields and integrals over them.

mod domain;
mod field;
mod lattice;
mod norms;

pub use domain::{Ball, BoundaryCell, Domain, Shape, FIXED};
pub use field::{discrete_gradient, ScalarField, VectorField};
pub use lattice::{to_point, unit_ball_volume, Lattice, Point};
pub use norms::{
    default_beta1_grid, forward_gradient_norm, luxemburg_norm, luxemburg_norm_on, modular,
    modular_on, pairwise_sum, sobolev_poincare_check, LuxemburgNorm, SobolevPoincareReport,
    LUXEMBURG_TOL,
};
