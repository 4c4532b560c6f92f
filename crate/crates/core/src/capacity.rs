//! Relative φ-capacities and boundary point classification.
//!
//! `C_φ(E, Ω)` is computed as an obstacle problem: zero boundary datum and
//! obstacle 1 on `E` together with its lattice neighbours, 0 elsewhere.
//! Since `φ` is increasing, truncating a competitor to `[0, 1]` never raises
//! its energy, so the constraint `u >= 1` may be met with equality.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Ball, Domain, Point, ScalarField, Shape};
use crate::phi::PhiFunction;
use crate::solver::{solve, Obstacle, ObstacleProblem, Solution, SolveOptions};

#[derive(Debug, Clone)]
pub struct CapacityInstance {
    ambient: Domain,
    /// Lattice indices of `E`, ascending.
    set: Vec<usize>,
    phi: PhiFunction,
}

impl CapacityInstance {
    /// `set` must be nonempty and, together with its lattice neighbours,
    /// consist of inside nodes of `ambient`.
    pub fn new(ambient: Domain, set: Vec<usize>, phi: PhiFunction) -> Result<Self> {
        if set.is_empty() {
            return Err(Error::Geometry("capacity of an empty set".into()));
        }
        let mut set = set;
        set.sort_unstable();
        set.dedup();
        let l = ambient.lattice();
        for &k in &set {
            if k >= l.len() || !ambient.is_inside(k) {
                return Err(Error::Geometry(format!(
                    "node {k} of E lies outside the ambient domain"
                )));
            }
            for axis in 0..l.dim() {
                for fwd in [false, true] {
                    let nb = l.neighbor(k, axis, fwd);
                    if !nb.is_some_and(|nb| ambient.is_inside(nb)) {
                        return Err(Error::Geometry(format!(
                            "E touches the ambient boundary at {:?}",
                            l.position(k)
                        )));
                    }
                }
            }
        }
        Ok(Self { ambient, set, phi })
    }

    /// `E` = lattice nodes in the closure of `e`.
    pub fn from_shapes(ambient: &Shape, e: &Shape, h: f64, phi: PhiFunction) -> Result<Self> {
        let domain = Domain::from_shape(ambient, h)?;
        let l = domain.lattice();
        let tol = -1e-9 * h;
        let set = (0..l.len())
            .filter(|&k| e.contains(&l.position(k), tol))
            .collect();
        Self::new(domain, set, phi)
    }

    pub fn ambient(&self) -> &Domain {
        &self.ambient
    }

    pub fn set(&self) -> &[usize] {
        &self.set
    }

    pub fn phi(&self) -> &PhiFunction {
        &self.phi
    }

    /// `E` and its lattice neighbours.
    pub fn neighbourhood(&self) -> Vec<bool> {
        let l = self.ambient.lattice();
        let mut mask = vec![false; l.len()];
        for &k in &self.set {
            mask[k] = true;
            for axis in 0..l.dim() {
                for fwd in [false, true] {
                    if let Some(nb) = l.neighbor(k, axis, fwd) {
                        mask[nb] = true;
                    }
                }
            }
        }
        mask
    }

    pub fn problem(&self) -> Result<ObstacleProblem> {
        let l = self.ambient.lattice();
        let mask = self.neighbourhood();
        let psi = ScalarField::new(
            l.clone(),
            mask.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect(),
        )?;
        ObstacleProblem::new(
            self.ambient.clone(),
            self.phi.clone(),
            Obstacle::Field(psi),
            ScalarField::zeros(l),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapacityResult {
    pub capacity: f64,
    /// Extremal field; its values lie in `[0, 1]`.
    pub solution: Solution,
}

/// Minimal energy over fields equal to 0 outside the ambient domain and to 1
/// on `E` and its neighbours.
pub fn compute_capacity(
    instance: &CapacityInstance,
    options: &SolveOptions,
) -> Result<CapacityResult> {
    let problem = instance.problem()?;
    let solution = solve(&problem, options)?;
    Ok(CapacityResult {
        capacity: solution.energy,
        solution,
    })
}

/// `(|B| φ⁻_{2B}(1/r), |B| φ⁺_{2B}(1/r))` with the infimum and supremum
/// over lattice nodes (spacing `h`, anchored at multiples of `h`) in `2B`.
pub fn ball_capacity_bounds(
    phi: &PhiFunction,
    dim: usize,
    ball: &Ball,
    h: f64,
) -> Result<(f64, f64)> {
    if !(ball.radius > 0.0 && h > 0.0) {
        return Err(Error::Argument(
            "ball radius and spacing must be positive".into(),
        ));
    }
    let domain = Domain::from_shape(&Shape::ball(dim, ball.center, 2.0 * ball.radius), h)?;
    let l = domain.lattice();
    let nodes = l.nodes_in_ball(&ball.center, 2.0 * ball.radius);
    let t = 1.0 / ball.radius;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for k in nodes {
        let v = phi.local_at_node(l, k)?.value(t);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let m = ball.measure(dim);
    Ok((m * lo, m * hi))
}

/// `C_φ(B, 2B)` on the lattice with spacing `h` anchored at multiples of `h`.
pub fn ball_capacity(
    phi: &PhiFunction,
    dim: usize,
    ball: &Ball,
    h: f64,
    options: &SolveOptions,
) -> Result<f64> {
    let e = Shape::ball(dim, ball.center, ball.radius);
    let ambient = Shape::ball(dim, ball.center, 2.0 * ball.radius);
    let inst = CapacityInstance::from_shapes(&ambient, &e, h, phi.clone())?;
    Ok(compute_capacity(&inst, options)?.capacity)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPointReport {
    /// Boundary point after snapping to the nearest halo node.
    pub x0: Point,
    pub radii: Vec<f64>,
    /// `|B ∖ Ω| / |B|` by node counting.
    pub measure_density_ratios: Vec<f64>,
    /// `C_φ(B ∖ Ω, 2B) / C_φ(B, 2B)`.
    pub fatness_ratios: Vec<f64>,
    pub c_star_measure: f64,
    pub c_star_capacity: f64,
    /// Radii below `4h` that were skipped.
    pub skipped: usize,
}

impl BoundaryPointReport {
    /// CSV with columns `radius,density_ratio,fatness_ratio`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["radius", "density_ratio", "fatness_ratio"])?;
        for i in 0..self.radii.len() {
            w.write_record([
                self.radii[i].to_string(),
                self.measure_density_ratios[i].to_string(),
                self.fatness_ratios[i].to_string(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }
}

/// Smallest radius, in grid spacings, for which a point is classified.
pub const MIN_RADIUS_CELLS: f64 = 4.0;

/// Measure density and capacity fatness of `Ω^c` at `x0` for each radius.
pub fn classify_boundary_point(
    domain: &Domain,
    phi: &PhiFunction,
    x0: &[f64],
    radii: &[f64],
    options: &SolveOptions,
) -> Result<BoundaryPointReport> {
    let h = domain.h();
    let dim = domain.dim();
    let x = crate::grid::to_point(x0)?;
    let halo = domain
        .nearest_halo(&x, 2.0 * h)
        .ok_or_else(|| Error::Argument(format!("{x0:?} is not on the rasterised boundary")))?;
    let x0 = domain.lattice().position(halo);
    let kept: Vec<f64> = radii
        .iter()
        .copied()
        .filter(|&r| r >= MIN_RADIUS_CELLS * h * (1.0 - 1e-12))
        .collect();
    let skipped = radii.len() - kept.len();
    if kept.is_empty() {
        return Err(Error::Argument(format!(
            "every radius is below {MIN_RADIUS_CELLS} grid spacings"
        )));
    }

    let per_radius: Vec<(f64, f64)> = kept
        .par_iter()
        .map(|&r| {
            let outside_at = |p: &Point| {
                let (i, j) = domain.lattice().signed_coords(p);
                !domain.is_inside_coords(i, j)
            };
            let ambient = Domain::from_shape(&Shape::ball(dim, x0, 2.0 * r), h)?;
            let l = ambient.lattice();
            let in_ball = l.nodes_in_ball(&x0, r);
            let outside: Vec<usize> = in_ball
                .iter()
                .copied()
                .filter(|&k| outside_at(&l.position(k)))
                .collect();
            let density = outside.len() as f64 / in_ball.len() as f64;
            let fat = if outside.is_empty() {
                0.0
            } else {
                let full = CapacityInstance::new(ambient.clone(), in_ball, phi.clone())?;
                let part = CapacityInstance::new(ambient, outside, phi.clone())?;
                let c_full = compute_capacity(&full, options)?.capacity;
                let c_part = compute_capacity(&part, options)?.capacity;
                c_part / c_full
            };
            Ok((density, fat))
        })
        .collect::<Result<_>>()?;
    let measure_density_ratios: Vec<f64> = per_radius.iter().map(|p| p.0).collect();
    let fatness_ratios: Vec<f64> = per_radius.iter().map(|p| p.1).collect();
    Ok(BoundaryPointReport {
        x0,
        c_star_measure: measure_density_ratios
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min),
        c_star_capacity: fatness_ratios.iter().copied().fold(f64::INFINITY, f64::min),
        radii: kept,
        measure_density_ratios,
        fatness_ratios,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phi::Coefficient;

    #[test]
    fn ball_bounds_for_power_coincide() {
        let p2 = PhiFunction::power(2.0).unwrap();
        let (lo, hi) =
            ball_capacity_bounds(&p2, 2, &Ball::new([0.0, 0.0], 0.25), 1.0 / 64.0).unwrap();
        assert!((lo - std::f64::consts::PI).abs() < 1e-12);
        assert_eq!(lo, hi);
    }

    #[test]
    fn ball_bounds_for_weighted_phi_differ() {
        let dp = PhiFunction::double_phase(2.0, 3.0, Coefficient::from_fn(|x| x[0])).unwrap();
        let (lo, hi) =
            ball_capacity_bounds(&dp, 2, &Ball::new([0.5, 0.5], 0.1), 1.0 / 128.0).unwrap();
        assert!(lo < hi && hi.is_finite());
        // |B| (10^2 + a 10^3) with a between 0.3 and 0.7 up to one spacing.
        let m = std::f64::consts::PI * 0.01;
        assert!((lo / m - (100.0 + 0.3 * 1000.0)).abs() < 1000.0 / 128.0 + 1e-9);
        assert!((hi / m - (100.0 + 0.7 * 1000.0)).abs() < 1000.0 / 128.0 + 1e-9);
    }

    #[test]
    fn set_touching_the_boundary_is_rejected() {
        let p2 = PhiFunction::power(2.0).unwrap();
        let ambient = Shape::Rectangle {
            min: [0.0, 0.0],
            max: [1.0, 1.0],
        };
        let e = Shape::Rectangle {
            min: [-0.5, 0.25],
            max: [0.5, 0.75],
        };
        assert!(matches!(
            CapacityInstance::from_shapes(&ambient, &e, 0.125, p2),
            Err(Error::Geometry(_))
        ));
    }

    #[test]
    fn extremal_field_is_in_unit_range_and_capacity_is_monotone() {
        let p2 = PhiFunction::power(2.0).unwrap();
        let ambient = Shape::Disk {
            center: [0.0, 0.0],
            radius: 1.0,
        };
        let small = CapacityInstance::from_shapes(
            &ambient,
            &Shape::Disk {
                center: [0.0, 0.0],
                radius: 0.2,
            },
            1.0 / 32.0,
            p2.clone(),
        )
        .unwrap();
        let large = CapacityInstance::from_shapes(
            &ambient,
            &Shape::Disk {
                center: [0.0, 0.0],
                radius: 0.4,
            },
            1.0 / 32.0,
            p2,
        )
        .unwrap();
        let a = compute_capacity(&small, &SolveOptions::default()).unwrap();
        let b = compute_capacity(&large, &SolveOptions::default()).unwrap();
        assert!(a.capacity <= b.capacity);
        assert!(a
            .solution
            .u
            .values()
            .iter()
            .all(|&v| (-1e-12..=1.0 + 1e-12).contains(&v)));
    }

    #[test]
    fn single_node_capacity_decreases_under_refinement() {
        let p3 = PhiFunction::power(3.0).unwrap();
        let ambient = Shape::Disk {
            center: [0.0, 0.0],
            radius: 0.5,
        };
        let caps: Vec<f64> = [1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0]
            .iter()
            .map(|&h| {
                let d = Domain::from_shape(&ambient, h).unwrap();
                let k = d.lattice().nearest(&[0.0, 0.0]).unwrap();
                let inst = CapacityInstance::new(d, vec![k], p3.clone()).unwrap();
                compute_capacity(&inst, &SolveOptions::default())
                    .unwrap()
                    .capacity
            })
            .collect();
        assert!(caps[0] > caps[1] && caps[1] > caps[2], "{caps:?}");
    }

    #[test]
    fn square_edge_density_tends_to_one_half() {
        let d = Domain::from_shape(
            &Shape::Rectangle {
                min: [0.0, 0.0],
                max: [1.0, 1.0],
            },
            1.0 / 256.0,
        )
        .unwrap();
        let p = PhiFunction::power(1.5).unwrap();
        let r = classify_boundary_point(
            &d,
            &p,
            &[0.5, 0.0],
            &[1.0 / 32.0, 1.0 / 16.0],
            &SolveOptions::default(),
        )
        .unwrap();
        for (&rad, &m) in r.radii.iter().zip(&r.measure_density_ratios) {
            assert!(m >= 0.5 && m - 0.5 < 0.7 * d.h() / rad, "{rad} {m}");
        }
        assert!(r.c_star_capacity > 0.05);
    }

    #[test]
    fn small_radii_are_skipped() {
        let d = Domain::from_shape(
            &Shape::Rectangle {
                min: [0.0, 0.0],
                max: [1.0, 1.0],
            },
            1.0 / 32.0,
        )
        .unwrap();
        let p = PhiFunction::power(1.5).unwrap();
        let r = classify_boundary_point(
            &d,
            &p,
            &[0.5, 0.0],
            &[0.25, 1.0 / 16.0],
            &SolveOptions::default(),
        )
        .unwrap();
        assert_eq!(r.skipped, 1);
        assert_eq!(r.radii, vec![0.25]);
        assert!(r
            .to_csv()
            .unwrap()
            .starts_with("radius,density_ratio,fatness_ratio\n"));
    }
}
