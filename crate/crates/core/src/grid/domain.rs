use std::collections::VecDeque;
use std::fmt;

use super::lattice::{unit_ball_volume, Lattice, Point};
use crate::error::{Error, Result};

/// Continuous open sets that can be rasterised into a [`Domain`].
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    /// `(a, b)` in one dimension.
    Interval {
        a: f64,
        b: f64,
    },
    Rectangle {
        min: Point,
        max: Point,
    },
    Disk {
        center: Point,
        radius: f64,
    },
    /// Square `(c - s, c + s)^2` with the closed quadrant
    /// `{x >= c_x, y <= c_y}` removed; the re-entrant corner sits at `c`.
    LShape {
        center: Point,
        half: f64,
    },
    /// Disk with the closed segment from the centre to the right edge removed.
    DiskMinusSlit {
        center: Point,
        radius: f64,
    },
    /// Rectangle minus the closed cusp
    /// `{x >= tip_x, |y - tip_y| <= coeff (x - tip_x)^power}`; the cusp opens
    /// towards the right edge and its tip is a boundary point of zero
    /// measure density.
    SquareMinusCusp {
        min: Point,
        max: Point,
        tip: Point,
        coeff: f64,
        power: f64,
    },
}

impl Shape {
    pub fn dim(&self) -> usize {
        match self {
            Shape::Interval { .. } => 1,
            _ => 2,
        }
    }

    /// A ball of the given dimension.
    pub fn ball(dim: usize, center: Point, radius: f64) -> Shape {
        if dim == 1 {
            Shape::Interval {
                a: center[0] - radius,
                b: center[0] + radius,
            }
        } else {
            Shape::Disk { center, radius }
        }
    }

    fn bounding_box(&self) -> (Point, Point) {
        match self {
            Shape::Interval { a, b } => ([*a, 0.0], [*b, 0.0]),
            Shape::Rectangle { min, max } | Shape::SquareMinusCusp { min, max, .. } => (*min, *max),
            Shape::Disk { center, radius } | Shape::DiskMinusSlit { center, radius } => (
                [center[0] - radius, center[1] - radius],
                [center[0] + radius, center[1] + radius],
            ),
            Shape::LShape { center, half } => (
                [center[0] - half, center[1] - half],
                [center[0] + half, center[1] + half],
            ),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            Shape::Interval { a, b } => b > a,
            Shape::Rectangle { min, max } => max[0] > min[0] && max[1] > min[1],
            Shape::Disk { radius, .. } | Shape::DiskMinusSlit { radius, .. } => *radius > 0.0,
            Shape::LShape { half, .. } => *half > 0.0,
            Shape::SquareMinusCusp {
                min,
                max,
                tip,
                coeff,
                power,
            } => {
                max[0] > min[0]
                    && max[1] > min[1]
                    && *coeff > 0.0
                    && *power > 0.0
                    && tip[0] > min[0]
                    && tip[0] < max[0]
                    && tip[1] > min[1]
                    && tip[1] < max[1]
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Geometry(format!("degenerate shape {self:?}")))
        }
    }

    /// Membership in the open set; `tol` shrinks the set slightly so that
    /// lattice nodes lying on the boundary count as outside.
    pub fn contains(&self, x: &Point, tol: f64) -> bool {
        let open_interval = |v: f64, a: f64, b: f64| v > a + tol && v < b - tol;
        match self {
            Shape::Interval { a, b } => open_interval(x[0], *a, *b),
            Shape::Rectangle { min, max } => {
                open_interval(x[0], min[0], max[0]) && open_interval(x[1], min[1], max[1])
            }
            Shape::Disk { center, radius } => {
                let d = (x[0] - center[0]).hypot(x[1] - center[1]);
                d < radius - tol
            }
            Shape::LShape { center, half } => {
                let in_square = open_interval(x[0], center[0] - half, center[0] + half)
                    && open_interval(x[1], center[1] - half, center[1] + half);
                let removed = x[0] >= center[0] - tol && x[1] <= center[1] + tol;
                in_square && !removed
            }
            Shape::DiskMinusSlit { center, radius } => {
                let d = (x[0] - center[0]).hypot(x[1] - center[1]);
                let on_slit = (x[1] - center[1]).abs() <= tol && x[0] >= center[0] - tol;
                d < radius - tol && !on_slit
            }
            Shape::SquareMinusCusp {
                min,
                max,
                tip,
                coeff,
                power,
            } => {
                let in_square =
                    open_interval(x[0], min[0], max[0]) && open_interval(x[1], min[1], max[1]);
                let dx = x[0] - tip[0];
                let in_cusp =
                    dx >= -tol && (x[1] - tip[1]).abs() <= coeff * dx.max(0.0).powf(*power) + tol;
                in_square && !in_cusp
            }
        }
    }
}

/// Inside node with at least one outside neighbour.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryCell {
    pub index: usize,
    /// Bit `2 * axis` marks an outside neighbour in the negative direction of
    /// `axis`, bit `2 * axis + 1` one in the positive direction.
    pub outward: u8,
}

impl BoundaryCell {
    pub fn faces_outward(&self, axis: usize, positive: bool) -> bool {
        self.outward & (1 << (2 * axis + positive as usize)) != 0
    }
}

/// Discretised bounded domain: an inside-mask over a lattice.
///
/// The quadrature cells of the domain are the nodes `c` whose cell
/// `c + [0, h]^n` has an inside corner; on the unit square
/// with nodes at `k h` they tile `[0, 1]^2` exactly.
#[derive(Clone)]
pub struct Domain {
    lattice: Lattice,
    inside: Vec<bool>,
    boundary: Vec<BoundaryCell>,
    halo: Vec<usize>,
    quadrature: Vec<usize>,
    free_nodes: Vec<usize>,
    free_index: Vec<u32>,
    shape: Option<Shape>,
}

impl fmt::Debug for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Domain")
            .field("lattice", &self.lattice)
            .field("inside_nodes", &self.free_nodes.len())
            .field("shape", &self.shape)
            .finish()
    }
}

pub const FIXED: u32 = u32::MAX;

impl Domain {
    /// Rasterises `shape` on the lattice anchored at multiples of `h`.
    pub fn from_shape(shape: &Shape, h: f64) -> Result<Self> {
        shape.validate()?;
        let (lo, hi) = shape.bounding_box();
        let dim = shape.dim();
        let lattice = Lattice::covering(dim, &lo[..dim], &hi[..dim], h)?;
        Self::rasterize(shape, lattice)
    }

    /// Rasterises `shape` on a given lattice.
    pub fn rasterize(shape: &Shape, lattice: Lattice) -> Result<Self> {
        shape.validate()?;
        if shape.dim() != lattice.dim() {
            return Err(Error::Geometry(
                "shape and lattice dimensions differ".into(),
            ));
        }
        let tol = 1e-9 * lattice.h();
        let mask = (0..lattice.len())
            .map(|k| shape.contains(&lattice.position(k), tol))
            .collect();
        let mut d = Self::from_mask(lattice, mask)?;
        d.shape = Some(shape.clone());
        Ok(d)
    }

    /// Builds a domain from an explicit inside-mask. The inside set must be
    /// nonempty, 4-connected and must not touch the lattice edge.
    pub fn from_mask(lattice: Lattice, inside: Vec<bool>) -> Result<Self> {
        if inside.len() != lattice.len() {
            return Err(Error::Argument(
                "mask length does not match the lattice".into(),
            ));
        }
        let dim = lattice.dim();
        let first = inside
            .iter()
            .position(|&b| b)
            .ok_or_else(|| Error::Geometry("domain has no inside nodes".into()))?;
        for (k, &b) in inside.iter().enumerate() {
            if !b {
                continue;
            }
            for axis in 0..dim {
                for fwd in [false, true] {
                    if lattice.neighbor(k, axis, fwd).is_none() {
                        return Err(Error::Geometry(format!(
                            "inside node {k} touches the lattice edge; a one-node margin is required"
                        )));
                    }
                }
            }
        }

        // Connectivity.
        let mut seen = vec![false; inside.len()];
        let mut queue = VecDeque::from([first]);
        seen[first] = true;
        let mut reached = 1usize;
        while let Some(k) = queue.pop_front() {
            for axis in 0..dim {
                for fwd in [false, true] {
                    if let Some(nb) = lattice.neighbor(k, axis, fwd) {
                        if inside[nb] && !seen[nb] {
                            seen[nb] = true;
                            reached += 1;
                            queue.push_back(nb);
                        }
                    }
                }
            }
        }
        let total = inside.iter().filter(|&&b| b).count();
        if reached != total {
            return Err(Error::Geometry(format!(
                "domain is not lattice-connected ({reached} of {total} inside nodes reachable)"
            )));
        }

        let mut boundary = Vec::new();
        let mut is_halo = vec![false; inside.len()];
        for (k, &b) in inside.iter().enumerate() {
            if !b {
                continue;
            }
            let mut outward = 0u8;
            for axis in 0..dim {
                for fwd in [false, true] {
                    let nb = lattice.neighbor(k, axis, fwd).expect("margin checked");
                    if !inside[nb] {
                        outward |= 1 << (2 * axis + fwd as usize);
                        is_halo[nb] = true;
                    }
                }
            }
            if outward != 0 {
                boundary.push(BoundaryCell { index: k, outward });
            }
        }
        let halo = (0..inside.len()).filter(|&k| is_halo[k]).collect();

        let quadrature = (0..lattice.len())
            .filter(|&c| {
                let (i, j) = lattice.coords(c);
                let (di, dj) = if dim == 1 { (1, 0) } else { (1, 1) };
                let (i, j) = (i as i64, j as i64);
                if lattice.checked_index(i + di, j + dj).is_none() {
                    return false;
                }
                (0..=di).any(|a| {
                    (0..=dj).any(|b| {
                        lattice
                            .checked_index(i + a, j + b)
                            .is_some_and(|k| inside[k])
                    })
                })
            })
            .collect();

        let mut free_index = vec![FIXED; inside.len()];
        let mut free_nodes = Vec::with_capacity(total);
        for (k, &b) in inside.iter().enumerate() {
            if b {
                free_index[k] = free_nodes.len() as u32;
                free_nodes.push(k);
            }
        }

        Ok(Self {
            lattice,
            inside,
            boundary,
            halo,
            quadrature,
            free_nodes,
            free_index,
            shape: None,
        })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn dim(&self) -> usize {
        self.lattice.dim()
    }

    pub fn h(&self) -> f64 {
        self.lattice.h()
    }

    pub fn shape(&self) -> Option<&Shape> {
        self.shape.as_ref()
    }

    pub fn inside_mask(&self) -> &[bool] {
        &self.inside
    }

    pub fn is_inside(&self, idx: usize) -> bool {
        self.inside[idx]
    }

    /// Inside test on the infinite extension of the lattice.
    pub fn is_inside_coords(&self, i: i64, j: i64) -> bool {
        self.lattice
            .checked_index(i, j)
            .map(|k| self.inside[k])
            .unwrap_or(false)
    }

    pub fn boundary_cells(&self) -> &[BoundaryCell] {
        &self.boundary
    }

    /// Outside nodes adjacent to an inside node.
    pub fn halo(&self) -> &[usize] {
        &self.halo
    }

    pub fn is_halo(&self, idx: usize) -> bool {
        !self.inside[idx] && self.halo.binary_search(&idx).is_ok()
    }

    pub fn quadrature_cells(&self) -> &[usize] {
        &self.quadrature
    }

    /// Inside nodes, in lattice order.
    pub fn inside_nodes(&self) -> &[usize] {
        &self.free_nodes
    }

    /// Position of an inside node in [`Domain::inside_nodes`], or
    /// [`FIXED`] for outside nodes.
    pub fn free_index(&self) -> &[u32] {
        &self.free_index
    }

    /// Discrete measure `|Q| h^n` of the quadrature cells.
    pub fn measure(&self) -> f64 {
        self.quadrature.len() as f64 * self.lattice.cell_volume()
    }

    /// Bounding box of the quadrature cells.
    pub fn bounding_box(&self) -> (Point, Point) {
        let h = self.lattice.h();
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for &c in &self.quadrature {
            let p = self.lattice.position(c);
            for k in 0..self.dim() {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k] + h);
            }
        }
        if self.dim() == 1 {
            lo[1] = 0.0;
            hi[1] = 0.0;
        }
        (lo, hi)
    }

    pub fn diameter(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        (hi[0] - lo[0]).hypot(hi[1] - lo[1])
    }

    /// Nearest halo node to `x` within `max_dist`.
    pub fn nearest_halo(&self, x: &Point, max_dist: f64) -> Option<usize> {
        self.halo
            .iter()
            .map(|&k| {
                let p = self.lattice.position(k);
                (k, (p[0] - x[0]).hypot(p[1] - x[1]))
            })
            .filter(|&(_, d)| d <= max_dist)
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
            .map(|(k, _)| k)
    }

    /// Sub-domain with the inside set restricted to `keep`.
    pub fn restrict(&self, keep: impl Fn(usize) -> bool) -> Result<Domain> {
        let mask = (0..self.lattice.len())
            .map(|k| self.inside[k] && keep(k))
            .collect();
        Domain::from_mask(self.lattice.clone(), mask)
    }
}

/// Closed ball `B(center, radius)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Point, radius: f64) -> Self {
        Self { center, radius }
    }

    /// Continuum measure `omega_n r^n`.
    pub fn measure(&self, dim: usize) -> f64 {
        unit_ball_volume(dim) * self.radius.powi(dim as i32)
    }

    /// Diameter `2r`, used exactly rather than the rasterised diameter.
    pub fn diameter(&self) -> f64 {
        2.0 * self.radius
    }

    pub fn scaled(&self, factor: f64) -> Ball {
        Ball::new(self.center, self.radius * factor)
    }

    pub fn contains(&self, x: &Point) -> bool {
        let d2 = (x[0] - self.center[0]).powi(2) + (x[1] - self.center[1]).powi(2);
        d2 <= self.radius * self.radius * (1.0 + 1e-12)
    }

    /// Quadrature cells of `domain` whose node lies in the ball.
    pub fn quadrature_cells(&self, domain: &Domain) -> Vec<usize> {
        let l = domain.lattice();
        domain
            .quadrature_cells()
            .iter()
            .copied()
            .filter(|&c| self.contains(&l.position(c)))
            .collect()
    }

    /// Inside nodes of `domain` lying in the ball.
    pub fn inside_nodes(&self, domain: &Domain) -> Vec<usize> {
        let l = domain.lattice();
        let mut v: Vec<usize> = l
            .nodes_in_ball(&self.center, self.radius)
            .into_iter()
            .filter(|&k| domain.is_inside(k))
            .collect();
        v.sort_unstable();
        v
    }

    /// True when every lattice node of the ball is inside `domain`.
    pub fn is_within(&self, domain: &Domain) -> bool {
        let l = domain.lattice();
        l.ball_coords(&self.center, self.radius)
            .into_iter()
            .all(|(i, j)| domain.is_inside_coords(i, j))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_quadrature_tiles_the_square() {
        let d = Domain::from_shape(
            &Shape::Rectangle {
                min: [0.0, 0.0],
                max: [1.0, 1.0],
            },
            1.0 / 64.0,
        )
        .unwrap();
        assert_eq!(d.inside_nodes().len(), 63 * 63);
        assert_eq!(d.quadrature_cells().len(), 64 * 64);
        assert!((d.measure() - 1.0).abs() < 1e-12);
        let (lo, hi) = d.bounding_box();
        assert_eq!((lo[0], hi[0]), (0.0, 1.0));
    }

    #[test]
    fn every_inside_node_next_to_outside_is_a_boundary_cell() {
        let d = Domain::from_shape(
            &Shape::Disk {
                center: [0.0, 0.0],
                radius: 0.5,
            },
            0.05,
        )
        .unwrap();
        let l = d.lattice();
        for &k in d.inside_nodes() {
            let touches = (0..2).any(|a| {
                [false, true]
                    .iter()
                    .any(|&f| !d.is_inside(l.neighbor(k, a, f).unwrap()))
            });
            let listed = d.boundary_cells().iter().any(|b| b.index == k);
            assert_eq!(touches, listed);
        }
    }

    #[test]
    fn interval_domain() {
        let d = Domain::from_shape(&Shape::Interval { a: 0.0, b: 1.0 }, 0.25).unwrap();
        assert_eq!(d.inside_nodes().len(), 3);
        assert_eq!(d.quadrature_cells().len(), 4);
        assert_eq!(d.halo().len(), 2);
    }

    #[test]
    fn disconnected_masks_are_rejected() {
        let l = Lattice::new(1, &[7], 1.0, &[0.0]).unwrap();
        let mask = vec![false, true, false, true, true, false, false];
        assert!(matches!(
            Domain::from_mask(l, mask),
            Err(Error::Geometry(_))
        ));
    }

    #[test]
    fn masks_touching_the_lattice_edge_are_rejected() {
        let l = Lattice::new(1, &[3], 1.0, &[0.0]).unwrap();
        assert!(Domain::from_mask(l, vec![true, true, false]).is_err());
    }

    #[test]
    fn slit_and_cusp_domains_stay_connected() {
        let slit = Domain::from_shape(
            &Shape::DiskMinusSlit {
                center: [0.0, 0.0],
                radius: 1.0,
            },
            1.0 / 32.0,
        )
        .unwrap();
        let on_slit = slit.lattice().nearest(&[0.5, 0.0]).unwrap();
        assert!(!slit.is_inside(on_slit));
        let cusp = Domain::from_shape(
            &Shape::SquareMinusCusp {
                min: [0.0, 0.0],
                max: [1.0, 1.0],
                tip: [0.5, 0.5],
                coeff: 0.8,
                power: 2.0,
            },
            1.0 / 32.0,
        )
        .unwrap();
        let tip = cusp.lattice().nearest(&[0.5, 0.5]).unwrap();
        assert!(!cusp.is_inside(tip));
        assert!(cusp.is_halo(tip));
    }

    #[test]
    fn l_shape_removes_the_lower_right_quadrant() {
        let d = Domain::from_shape(
            &Shape::LShape {
                center: [0.0, 0.0],
                half: 1.0,
            },
            0.125,
        )
        .unwrap();
        let l = d.lattice();
        assert!(!d.is_inside(l.nearest(&[0.5, -0.5]).unwrap()));
        assert!(d.is_inside(l.nearest(&[-0.5, -0.5]).unwrap()));
        assert!(d.is_inside(l.nearest(&[0.5, 0.5]).unwrap()));
        assert!(!d.is_inside(l.nearest(&[0.0, 0.0]).unwrap()));
    }
}
