//! Empirical checks of regularity estimates on computed minimizers.
//!
//! The estimates involve constants that exist but are not computable, so
//! every check fits its constant from samples and judges it by stability
//! across scales.

mod caccioppoli;
mod continuity;
mod gehring;

pub use caccioppoli::{
    caccioppoli_boundary, caccioppoli_interior_k, caccioppoli_interior_mean, caccioppoli_sweep,
    BallRecord, CaccioppoliPair, CaccioppoliReport, CaccioppoliVariant,
};
pub use continuity::{boundary_continuity_check, BoundaryContinuityReport, Verdict, DECAY_SLACK};
pub use gehring::{gehring_estimate, GehringLevel, GehringReport, GEHRING_GROWTH};

use crate::error::Result;
use crate::grid::{forward_gradient_norm, pairwise_sum, Lattice, ScalarField};
use crate::phi::PhiFunction;

/// `sum_{c in cells} φ(x_c, g(c))^power h^n`.
pub(crate) fn integrate_phi(
    lattice: &Lattice,
    phi: &PhiFunction,
    cells: &[usize],
    power: f64,
    g: impl Fn(usize) -> f64,
) -> Result<f64> {
    let terms = cells
        .iter()
        .map(|&c| Ok(phi.local_at_node(lattice, c)?.value(g(c)).powf(power)))
        .collect::<Result<Vec<f64>>>()?;
    Ok(pairwise_sum(&terms) * lattice.cell_volume())
}

/// `|D⁺f|` at every node.
pub(crate) fn gradient_norms(f: &ScalarField) -> Vec<f64> {
    (0..f.lattice().len())
        .map(|c| forward_gradient_norm(f, c))
        .collect()
}
