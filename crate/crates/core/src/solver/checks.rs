//! Solution-level checks: locality of minimizers and the comparison
//! principle.

use super::{solve, Obstacle, ObstacleProblem, Solution, SolveOptions};
use crate::error::{Error, Result};
use crate::grid::{Domain, ScalarField};
use crate::phi::{
    check_a0, check_a1, check_ainc_adec, default_beta_grid, geometric_grid, A1Mode, BallSampler,
    Condition, ConditionReport, Monotonicity, PhiFunction,
};

#[derive(Debug, Clone, PartialEq)]
pub struct RestrictionReport {
    /// Energy of the given field on the sub-domain.
    pub energy_restricted: f64,
    /// Energy of the re-solved sub-problem.
    pub energy_resolved: f64,
    pub gap: f64,
    pub passes: bool,
}

/// Re-solves the problem on `sub` with boundary datum `u` and obstacle `ψ`
/// and compares energies; a minimizer restricts to a minimizer, so the gap
/// must vanish up to `tol`.
pub fn local_min_restriction_check(
    problem: &ObstacleProblem,
    u: &ScalarField,
    sub: &Domain,
    options: &SolveOptions,
    tol: f64,
) -> Result<RestrictionReport> {
    let domain = problem.domain();
    if sub.lattice() != domain.lattice() {
        return Err(Error::Argument(
            "sub-domain lives on a different lattice".into(),
        ));
    }
    if sub.inside_nodes().iter().any(|&k| !domain.is_inside(k)) {
        return Err(Error::Argument(
            "sub-domain is not contained in the domain".into(),
        ));
    }
    let restricted = ObstacleProblem::new(
        sub.clone(),
        problem.phi().clone(),
        problem.obstacle().clone(),
        u.clone(),
    )?;
    let energy_restricted = restricted.energy(u)?;
    let resolved = solve(
        &restricted,
        &SolveOptions {
            seed: None,
            ..options.clone()
        },
    )?;
    let gap = energy_restricted - resolved.energy;
    Ok(RestrictionReport {
        energy_restricted,
        energy_resolved: resolved.energy,
        gap,
        passes: gap <= tol,
    })
}

/// Structural conditions under which the comparison principle is claimed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Hypotheses {
    pub a0: bool,
    pub a1: bool,
    pub adec: bool,
}

impl Hypotheses {
    /// Reads the flags from condition reports; missing conditions count as
    /// unverified.
    pub fn from_reports(reports: &[ConditionReport]) -> Self {
        let holds = |c: Condition| reports.iter().any(|r| r.condition == c && r.holds);
        Self {
            a0: holds(Condition::A0),
            a1: holds(Condition::A1),
            adec: holds(Condition::ADecQ),
        }
    }

    /// Runs the default checkers: (A0) on the default β grid, (A1) on three
    /// dyadic radii below a quarter of the diameter and (aDec) with the
    /// declared `q` over `t` in `[1e-4, 1e4]`.
    pub fn verify(phi: &PhiFunction, domain: &Domain) -> Result<Self> {
        let a0 = check_a0(phi, domain, &default_beta_grid())?;
        let mut sampler = BallSampler::dyadic(domain.diameter() / 4.0, 3);
        sampler.radii.retain(|&r| r >= domain.h());
        let a1 = if sampler.radii.is_empty() {
            None
        } else {
            Some(check_a1(phi, domain, &sampler, A1Mode::A1)?)
        };
        let t = geometric_grid(1e-4, 1e4, 81)?;
        let adec = check_ainc_adec(phi, domain, phi.q_upper(), Monotonicity::Dec, &t)?;
        Ok(Self {
            a0: a0.holds,
            a1: a1.is_some_and(|r| r.holds),
            adec: adec.holds,
        })
    }

    pub fn all(&self) -> bool {
        self.a0 && self.a1 && self.adec
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    /// `max (u₁ - u₂)` over inside nodes.
    pub max_difference: f64,
    pub passes: bool,
    pub first: Solution,
    pub second: Solution,
}

/// Solves both problems and checks `u₁ <= u₂` on the inside nodes.
///
/// Both problems must use the same `φ`, which must be strictly convex and
/// satisfy the flagged hypotheses; `ψ₁ <= ψ₂` on inside nodes and
/// `f₁ <= f₂` on the halo are checked.
pub fn comparison_check(
    first: &ObstacleProblem,
    second: &ObstacleProblem,
    hypotheses: &Hypotheses,
    options: &SolveOptions,
    tol: f64,
) -> Result<ComparisonReport> {
    let d1 = first.domain();
    let d2 = second.domain();
    if d1.lattice() != d2.lattice() || d1.inside_mask() != d2.inside_mask() {
        return Err(Error::Argument("comparison needs a common domain".into()));
    }
    if !first.phi().is_strictly_convex() || !second.phi().is_strictly_convex() {
        return Err(Error::Hypothesis(
            "comparison needs a strictly convex φ".into(),
        ));
    }
    if !hypotheses.all() {
        return Err(Error::Hypothesis(format!(
            "comparison needs verified (A0), (A1) and (aDec); got {hypotheses:?}"
        )));
    }
    let obstacle_order = match (first.obstacle(), second.obstacle()) {
        (_, Obstacle::None) => matches!(first.obstacle(), Obstacle::None),
        (Obstacle::None, _) => true,
        (Obstacle::Field(a), Obstacle::Field(b)) => {
            d1.inside_nodes().iter().all(|&k| a.get(k) <= b.get(k))
        }
    };
    if !obstacle_order {
        return Err(Error::Hypothesis("comparison needs ψ₁ <= ψ₂".into()));
    }
    let (f1, f2) = (first.boundary(), second.boundary());
    if let Some(&k) = d1
        .halo()
        .iter()
        .find(|&&k| f1.get(k) - f2.get(k) > 1e-12 * (1.0 + f2.get(k).abs()))
    {
        return Err(Error::Hypothesis(format!(
            "comparison needs f₁ <= f₂ on the boundary; fails at {:?}",
            d1.lattice().position(k)
        )));
    }
    let s1 = solve(first, options)?;
    let s2 = solve(second, options)?;
    let max_difference = d1
        .inside_nodes()
        .iter()
        .map(|&k| s1.u.get(k) - s2.u.get(k))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(ComparisonReport {
        max_difference,
        passes: max_difference <= tol,
        first: s1,
        second: s2,
    })
}
