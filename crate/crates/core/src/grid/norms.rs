//! Modulars, Luxemburg norms and the Sobolev–Poincaré verifier.

use rayon::prelude::*;

use super::domain::{Ball, Domain};
use super::field::ScalarField;
use crate::error::{Error, Result};
use crate::phi::PhiFunction;

/// Pairwise sum with a fixed split order, so results do not depend on
/// thread scheduling.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 64;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// `sum_c g(c) h^n` over the given quadrature cells.
pub(crate) fn integrate(
    cells: &[usize],
    cell_volume: f64,
    g: impl Fn(usize) -> Result<f64> + Sync,
) -> Result<f64> {
    let terms: Vec<f64> = cells.par_iter().map(|&c| g(c)).collect::<Result<_>>()?;
    Ok(pairwise_sum(&terms) * cell_volume)
}

/// Magnitude of the forward difference at node `c`.
pub fn forward_gradient_norm(field: &ScalarField, c: usize) -> f64 {
    let l = field.lattice();
    let u = field.values();
    let mut s = 0.0;
    for axis in 0..l.dim() {
        let d = match l.neighbor(c, axis, true) {
            Some(f) => u[f] - u[c],
            None => u[c] - u[l.neighbor(c, axis, false).expect("axes have >= 2 nodes")],
        };
        s += d * d;
    }
    s.sqrt() / l.h()
}

fn check_lattice(domain: &Domain, field: &ScalarField) -> Result<()> {
    if field.lattice() != domain.lattice() {
        return Err(Error::Argument("field and domain lattices differ".into()));
    }
    Ok(())
}

/// `ρ_φ(f) = sum_{c in Q} φ(x_c, |f_c|) h^n`.
pub fn modular(domain: &Domain, phi: &PhiFunction, field: &ScalarField) -> Result<f64> {
    modular_on(domain, domain.quadrature_cells(), phi, field, 1.0)
}

/// Modular of `f / lambda` restricted to `cells`.
pub fn modular_on(
    domain: &Domain,
    cells: &[usize],
    phi: &PhiFunction,
    field: &ScalarField,
    lambda: f64,
) -> Result<f64> {
    check_lattice(domain, field)?;
    let l = domain.lattice();
    let v = field.values();
    integrate(cells, l.cell_volume(), |c| {
        Ok(phi.local_at_node(l, c)?.value(v[c].abs() / lambda))
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LuxemburgNorm {
    pub value: f64,
    /// False when `ρ(f/λ)` jumps across 1 at the returned `λ`, so the
    /// infimum is not attained with equality.
    pub attained: bool,
}

pub const LUXEMBURG_TOL: f64 = 1e-10;

/// `inf { λ > 0 : ρ_φ(f/λ) <= 1 }` by bisection to relative tolerance
/// [`LUXEMBURG_TOL`]. The returned `λ` always satisfies `ρ(f/λ) <= 1`.
pub fn luxemburg_norm(
    domain: &Domain,
    phi: &PhiFunction,
    field: &ScalarField,
) -> Result<LuxemburgNorm> {
    luxemburg_norm_on(domain, domain.quadrature_cells(), phi, field)
}

pub fn luxemburg_norm_on(
    domain: &Domain,
    cells: &[usize],
    phi: &PhiFunction,
    field: &ScalarField,
) -> Result<LuxemburgNorm> {
    check_lattice(domain, field)?;
    let v = field.values();
    if cells.iter().all(|&c| v[c] == 0.0) {
        return Ok(LuxemburgNorm {
            value: 0.0,
            attained: true,
        });
    }
    let rho = |lambda: f64| modular_on(domain, cells, phi, field, lambda);

    // Invariant: rho(lo) > 1 >= rho(hi).
    let (mut lo, mut hi);
    if rho(1.0)? <= 1.0 {
        hi = 1.0;
        lo = 0.5;
        while rho(lo)? <= 1.0 {
            hi = lo;
            lo *= 0.5;
            if lo < f64::MIN_POSITIVE {
                return Err(Error::Domain("modular stays below 1 as λ -> 0".into()));
            }
        }
    } else {
        lo = 1.0;
        hi = 2.0;
        while rho(hi)? > 1.0 {
            lo = hi;
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(Error::Domain("modular stays above 1 as λ -> ∞".into()));
            }
        }
    }
    while hi - lo > LUXEMBURG_TOL * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if rho(mid)? <= 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let at_hi = rho(hi)?;
    Ok(LuxemburgNorm {
        value: hi,
        attained: at_hi >= 1.0 - 1e-6,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SobolevPoincareReport {
    /// Factor applied to the field so that `‖∇v‖_{φ^{1/s}} <= 1`.
    pub scale: f64,
    pub beta_grid: Vec<f64>,
    pub lhs: Vec<f64>,
    pub rhs: f64,
    /// `lhs / rhs` per `β₁`.
    pub ratios: Vec<f64>,
    /// Largest sampled `β₁` with `lhs <= rhs`, if any.
    pub best_beta: Option<f64>,
}

/// `β₁ = 2^{-k}` for `k = 0..=10`, descending.
pub fn default_beta1_grid() -> Vec<f64> {
    (0..=10).map(|k| 0.5f64.powi(k)).collect()
}

/// Compares `⨍_B φ(x, β₁|v - v_B| / diam B)` with `(⨍_B φ^{1/s}(x, |∇v|))^s + 1`
/// on `ball ∩ Ω`, or on all of `Ω` when `ball` is `None`. The field is first
/// scaled down so that the Luxemburg norm of its gradient for `φ^{1/s}` is
/// at most 1.
pub fn sobolev_poincare_check(
    domain: &Domain,
    ball: Option<&Ball>,
    phi: &PhiFunction,
    field: &ScalarField,
    s: f64,
    beta_grid: &[f64],
) -> Result<SobolevPoincareReport> {
    check_lattice(domain, field)?;
    let n = domain.dim() as f64;
    let s_max = if domain.dim() == 1 {
        f64::INFINITY
    } else {
        n / (n - 1.0)
    };
    if !(s >= 1.0 && s < s_max) {
        return Err(Error::Argument(format!(
            "s must lie in [1, {s_max}), got {s}"
        )));
    }
    if beta_grid.is_empty() || beta_grid.iter().any(|&b| !(b > 0.0)) {
        return Err(Error::Argument(
            "β₁ grid must be nonempty and positive".into(),
        ));
    }
    let (cells, diam) = match ball {
        Some(b) => (b.quadrature_cells(domain), b.diameter()),
        None => (domain.quadrature_cells().to_vec(), domain.diameter()),
    };
    if cells.is_empty() {
        return Err(Error::Geometry(
            "ball contains no quadrature cell of the domain".into(),
        ));
    }
    let l = domain.lattice();
    let vol = l.cell_volume();
    let measure = cells.len() as f64 * vol;

    let grad = ScalarField::new(
        l.clone(),
        (0..l.len())
            .map(|c| forward_gradient_norm(field, c))
            .collect(),
    )?;
    let phi_s = phi.powered(1.0 / s);
    let norm = luxemburg_norm_on(domain, &cells, &phi_s, &grad)?.value;
    let scale = if norm > 1.0 { 1.0 / norm } else { 1.0 };

    let v = field.values();
    let mean_v =
        pairwise_sum(&cells.iter().map(|&c| v[c]).collect::<Vec<_>>()) / cells.len() as f64;
    let rhs_mean = modular_on(domain, &cells, &phi_s, &grad, 1.0 / scale)? / measure;
    let rhs = rhs_mean.powf(s) + 1.0;
    let lhs = beta_grid
        .iter()
        .map(|&b| {
            integrate(&cells, vol, |c| {
                let t = b * scale * (v[c] - mean_v).abs() / diam;
                Ok(phi.local_at_node(l, c)?.value(t))
            })
            .map(|x| x / measure)
        })
        .collect::<Result<Vec<f64>>>()?;
    let ratios: Vec<f64> = lhs.iter().map(|x| x / rhs).collect();
    let best_beta = beta_grid
        .iter()
        .zip(&lhs)
        .filter(|(_, &x)| x <= rhs)
        .map(|(&b, _)| b)
        .fold(None, |acc: Option<f64>, b| {
            Some(acc.map_or(b, |a| a.max(b)))
        });
    Ok(SobolevPoincareReport {
        scale,
        beta_grid: beta_grid.to_vec(),
        lhs,
        rhs,
        ratios,
        best_beta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Shape;
    use approx::assert_abs_diff_eq;

    fn unit_square() -> Domain {
        Domain::from_shape(
            &Shape::Rectangle {
                min: [0.0, 0.0],
                max: [1.0, 1.0],
            },
            1.0 / 64.0,
        )
        .unwrap()
    }

    #[test]
    fn pairwise_sum_matches_naive_sum() {
        let v: Vec<f64> = (0..1000).map(|k| k as f64).collect();
        assert_eq!(pairwise_sum(&v), 499_500.0);
    }

    #[test]
    fn modular_examples() {
        let d = unit_square();
        let p2 = PhiFunction::power(2.0).unwrap();
        let one = ScalarField::constant(d.lattice(), 1.0);
        assert_abs_diff_eq!(modular(&d, &p2, &one).unwrap(), 1.0, epsilon = 1e-12);
        let zero = ScalarField::zeros(d.lattice());
        assert_eq!(modular(&d, &p2, &zero).unwrap(), 0.0);

        let p3 = PhiFunction::power(3.0).unwrap();
        let x1 = ScalarField::from_fn(d.lattice(), |x| x[0]).unwrap();
        let m = modular(&d, &p3, &x1).unwrap();
        assert!((m - 0.25).abs() <= 1.0 / 64.0, "{m}");
    }

    #[test]
    fn modular_converges_at_first_order() {
        let p3 = PhiFunction::power(3.0).unwrap();
        let err = |h: f64| {
            let d = Domain::from_shape(
                &Shape::Rectangle {
                    min: [0.0, 0.0],
                    max: [1.0, 1.0],
                },
                h,
            )
            .unwrap();
            let f = ScalarField::from_fn(d.lattice(), |x| x[0]).unwrap();
            (modular(&d, &p3, &f).unwrap() - 0.25).abs()
        };
        let (e1, e2) = (err(1.0 / 32.0), err(1.0 / 64.0));
        assert!((e1 / e2 - 2.0).abs() < 0.1, "{e1} {e2}");
    }

    #[test]
    fn luxemburg_examples() {
        let d = unit_square();
        let p2 = PhiFunction::power(2.0).unwrap();
        let c = ScalarField::constant(d.lattice(), 3.5);
        let n = luxemburg_norm(&d, &p2, &c).unwrap();
        assert!((n.value - 3.5).abs() <= 3.5 * 1e-9);
        assert!(n.attained);
        assert_eq!(
            luxemburg_norm(&d, &p2, &ScalarField::zeros(d.lattice()))
                .unwrap()
                .value,
            0.0
        );

        // Oracle: the same left Riemann sum of x^2, then λ = sqrt(ρ).
        let f = ScalarField::from_fn(d.lattice(), |x| x[0]).unwrap();
        let h = 1.0 / 64.0;
        let discrete: f64 = (0..64).map(|k| (k as f64 * h).powi(2) * h).sum();
        let n = luxemburg_norm(&d, &p2, &f).unwrap();
        assert!((n.value - discrete.sqrt()).abs() < 1e-9);
        assert!((n.value - 3f64.sqrt().recip()).abs() < 1e-2);
    }

    #[test]
    fn luxemburg_flags_jumps() {
        let d = unit_square();
        let step = PhiFunction::custom(
            |_, t| if t < 1.0 { 0.0 } else { 4.0 * t * t },
            2.0,
            2.0,
            1.0,
            false,
        )
        .unwrap();
        let f = ScalarField::constant(d.lattice(), 1.0);
        let n = luxemburg_norm(&d, &step, &f).unwrap();
        assert!(!n.attained);
        assert!((n.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn sobolev_poincare_examples() {
        let disk = Domain::from_shape(
            &Shape::Disk {
                center: [0.0, 0.0],
                radius: 1.0,
            },
            1.0 / 32.0,
        )
        .unwrap();
        let p2 = PhiFunction::power(2.0).unwrap();
        let ball = Ball::new([0.0, 0.0], 1.0);
        let c = ScalarField::constant(disk.lattice(), 2.0);
        let r = sobolev_poincare_check(&disk, Some(&ball), &p2, &c, 1.0, &default_beta1_grid())
            .unwrap();
        assert!(r.lhs.iter().all(|&x| x == 0.0));
        assert_eq!(r.best_beta, Some(1.0));

        let x1 = ScalarField::from_fn(disk.lattice(), |x| x[0]).unwrap();
        let r = sobolev_poincare_check(&disk, Some(&ball), &p2, &x1, 1.0, &default_beta1_grid())
            .unwrap();
        assert_eq!(r.best_beta, Some(1.0));
        // ⨍ x_1^2 / 4 over the unit disk is 1/16.
        assert!((r.lhs[0] / r.scale.powi(2) - 1.0 / 16.0).abs() < 5e-3);
        assert!(sobolev_poincare_check(&disk, None, &p2, &x1, 2.0, &[1.0]).is_err());
    }
}
