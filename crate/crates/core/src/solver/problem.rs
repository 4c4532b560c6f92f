use crate::error::{Error, Result};
use crate::grid::{Domain, ScalarField};
use crate::phi::PhiFunction;

use super::assembly::Assembly;

/// Lower constraint `u >= ψ` on the inside nodes.
#[derive(Debug, Clone, PartialEq)]
pub enum Obstacle {
    /// `ψ ≡ -∞`: projection is disabled.
    None,
    Field(ScalarField),
}

impl Obstacle {
    pub fn field(&self) -> Option<&ScalarField> {
        match self {
            Obstacle::None => None,
            Obstacle::Field(f) => Some(f),
        }
    }

    /// `ψ` at node `k`, `-∞` without an obstacle.
    pub fn at(&self, k: usize) -> f64 {
        match self {
            Obstacle::None => f64::NEG_INFINITY,
            Obstacle::Field(f) => f.get(k),
        }
    }
}

/// Obstacle problem on a rasterised domain: minimise
/// `sum_Q φ(x_c, |D⁺u_c|) h^n` over `u >= ψ` on inside nodes and `u = f`
/// elsewhere.
#[derive(Debug, Clone)]
pub struct ObstacleProblem {
    domain: Domain,
    phi: PhiFunction,
    obstacle: Obstacle,
    boundary: ScalarField,
    delta: f64,
}

/// Relative tolerance for `(ψ - f)₊ = 0` on the halo.
const HALO_TOL: f64 = 1e-12;

impl ObstacleProblem {
    /// Validates admissibility: matching lattices, `ψ <= f` on the halo and
    /// finite energy of `max(ψ, f)`.
    pub fn new(
        domain: Domain,
        phi: PhiFunction,
        obstacle: Obstacle,
        boundary: ScalarField,
    ) -> Result<Self> {
        if boundary.lattice() != domain.lattice() {
            return Err(Error::Argument(
                "boundary datum lives on a different lattice".into(),
            ));
        }
        if let Obstacle::Field(psi) = &obstacle {
            if psi.lattice() != domain.lattice() {
                return Err(Error::Argument(
                    "obstacle lives on a different lattice".into(),
                ));
            }
            for &k in domain.halo() {
                let (p, f) = (psi.get(k), boundary.get(k));
                let excess = p - f;
                if excess > HALO_TOL * (1.0 + f.abs()) {
                    return Err(Error::Infeasible {
                        node: k,
                        position: domain.lattice().position(k)[..domain.dim()].to_vec(),
                        excess,
                    });
                }
            }
        }
        let mut problem = Self {
            domain,
            phi,
            obstacle,
            boundary,
            delta: 0.0,
        };
        problem.delta = problem.default_delta();
        let start = problem.feasible_start();
        let e = problem.energy(&start)?;
        if !e.is_finite() {
            return Err(Error::Infeasible {
                node: usize::MAX,
                position: vec![],
                excess: e,
            });
        }
        Ok(problem)
    }

    /// Unconstrained problem.
    pub fn dirichlet(domain: Domain, phi: PhiFunction, boundary: ScalarField) -> Result<Self> {
        Self::new(domain, phi, Obstacle::None, boundary)
    }

    /// Overrides the gradient smoothing `δ >= 0`.
    pub fn with_delta(mut self, delta: f64) -> Result<Self> {
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::Argument(format!(
                "smoothing must be nonnegative, got {delta}"
            )));
        }
        self.delta = delta;
        Ok(self)
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn phi(&self) -> &PhiFunction {
        &self.phi
    }

    pub fn obstacle(&self) -> &Obstacle {
        &self.obstacle
    }

    pub fn boundary(&self) -> &ScalarField {
        &self.boundary
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Oscillation of the data over the lattice divided by the domain
    /// diameter, the natural gradient scale; 1 for constant data.
    pub fn gradient_scale(&self) -> f64 {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in self.boundary.values() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if let Obstacle::Field(psi) = &self.obstacle {
            for &k in self.domain.inside_nodes() {
                lo = lo.min(psi.get(k));
                hi = hi.max(psi.get(k));
            }
        }
        let osc = hi - lo;
        if osc > 0.0 {
            osc / self.domain.diameter()
        } else {
            1.0
        }
    }

    fn default_delta(&self) -> f64 {
        1e-8 * self.gradient_scale()
    }

    /// `max(ψ, f)` on inside nodes, `f` elsewhere.
    pub fn feasible_start(&self) -> ScalarField {
        let mut u = self.boundary.clone();
        let v = u.values_mut();
        for &k in self.domain.inside_nodes() {
            v[k] = v[k].max(self.obstacle.at(k));
        }
        u
    }

    /// True when `u >= ψ` on inside nodes and `u = f` elsewhere.
    pub fn is_feasible(&self, u: &ScalarField, tol: f64) -> bool {
        let b = self.boundary.values();
        u.values().iter().enumerate().all(|(k, &x)| {
            if self.domain.is_inside(k) {
                x >= self.obstacle.at(k) - tol
            } else {
                x == b[k]
            }
        })
    }

    /// Exact discrete energy (`δ = 0`).
    pub fn energy(&self, u: &ScalarField) -> Result<f64> {
        self.energy_smoothed(u, 0.0)
    }

    /// `sum_Q φ(x_c, sqrt(|D⁺u_c|^2 + δ^2)) h^n`.
    pub fn energy_smoothed(&self, u: &ScalarField, delta: f64) -> Result<f64> {
        if u.lattice() != self.domain.lattice() {
            return Err(Error::Argument("field lives on a different lattice".into()));
        }
        let asm = Assembly::new(&self.domain, self.domain.quadrature_cells(), &self.phi)?;
        Ok(asm.energy(u.values(), delta))
    }
}

/// Exact discrete energy of `field` for `problem`.
pub fn energy(problem: &ObstacleProblem, field: &ScalarField) -> Result<f64> {
    problem.energy(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Shape;
    use crate::phi::Coefficient;
    use approx::assert_abs_diff_eq;

    fn square() -> Domain {
        Domain::from_shape(
            &Shape::Rectangle {
                min: [0.0, 0.0],
                max: [1.0, 1.0],
            },
            1.0 / 32.0,
        )
        .unwrap()
    }

    #[test]
    fn energy_examples() {
        let d = square();
        let x1 = ScalarField::from_fn(d.lattice(), |x| x[0]).unwrap();
        let p2 =
            ObstacleProblem::dirichlet(d.clone(), PhiFunction::power(2.0).unwrap(), x1.clone())
                .unwrap();
        assert_abs_diff_eq!(p2.energy(&x1).unwrap(), 1.0, epsilon = 1e-10);
        let c = ScalarField::constant(d.lattice(), 3.0);
        assert_eq!(p2.energy(&c).unwrap(), 0.0);
        let dp = PhiFunction::double_phase(2.0, 3.0, Coefficient::Constant(1.0)).unwrap();
        let p = ObstacleProblem::dirichlet(d, dp, x1.clone()).unwrap();
        assert_abs_diff_eq!(p.energy(&x1).unwrap(), 2.0, epsilon = 1e-10);
    }

    #[test]
    fn obstacle_above_boundary_datum_is_infeasible() {
        let d = square();
        let f = ScalarField::zeros(d.lattice());
        let psi = ScalarField::constant(d.lattice(), 0.5);
        let err =
            ObstacleProblem::new(d, PhiFunction::power(2.0).unwrap(), Obstacle::Field(psi), f)
                .unwrap_err();
        assert!(matches!(err, Error::Infeasible { excess, .. } if excess == 0.5));
    }

    #[test]
    fn feasible_start_respects_constraints() {
        let d = square();
        let f = ScalarField::zeros(d.lattice());
        let psi = ScalarField::from_fn(d.lattice(), |x| {
            0.2 - (x[0] - 0.5).powi(2) - (x[1] - 0.5).powi(2)
        })
        .unwrap();
        let p = ObstacleProblem::new(d, PhiFunction::power(2.0).unwrap(), Obstacle::Field(psi), f)
            .unwrap();
        assert!(p.is_feasible(&p.feasible_start(), 0.0));
    }
}
