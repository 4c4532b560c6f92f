use crate::error::{Error, Result};

/// A point in the plane. One-dimensional problems use the first component
/// and keep the second at zero.
pub type Point = [f64; 2];

/// Converts a coordinate slice of length 1 or 2 into a [`Point`].
pub fn to_point(x: &[f64]) -> Result<Point> {
    match x {
        [a] => Ok([*a, 0.0]),
        [a, b] => Ok([*a, *b]),
        _ => Err(Error::Domain(format!(
            "points must have 1 or 2 coordinates, got {}",
            x.len()
        ))),
    }
}

/// Volume of the unit ball in dimension `dim` (1 or 2).
pub fn unit_ball_volume(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        _ => std::f64::consts::PI,
    }
}

/// Uniform Cartesian lattice of nodes `origin + (i, j) h`.
///
/// Values live on nodes. The quadrature cell attached to node `(i, j)` is
/// the square `[x_i, x_i + h] x [y_j, y_j + h]`, and its gradient is the
/// forward difference taken at that node.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    dim: usize,
    dims: [usize; 2],
    h: f64,
    origin: Point,
}

impl Lattice {
    pub fn new(dim: usize, dims: &[usize], h: f64, origin: &[f64]) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::Argument(format!(
                "dimension must be 1 or 2, got {dim}"
            )));
        }
        if dims.len() != dim || origin.len() != dim {
            return Err(Error::Argument(
                "dims and origin must have one entry per dimension".into(),
            ));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Argument(format!(
                "cell size must be positive, got {h}"
            )));
        }
        if dims.iter().any(|&d| d < 2) {
            return Err(Error::Argument(
                "every lattice axis needs at least 2 nodes".into(),
            ));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::Argument("origin must be finite".into()));
        }
        let mut d = [1, 1];
        d[..dim].copy_from_slice(dims);
        let mut o = [0.0, 0.0];
        o[..dim].copy_from_slice(origin);
        Ok(Self {
            dim,
            dims: d,
            h,
            origin: o,
        })
    }

    /// Lattice anchored at integer multiples of `h` that covers the box
    /// `[lo, hi]` with one spare node on every side. Lattices built this way
    /// with the same `h` share their nodes.
    pub fn covering(dim: usize, lo: &[f64], hi: &[f64], h: f64) -> Result<Self> {
        if lo.len() != dim || hi.len() != dim {
            return Err(Error::Argument(
                "box corners must match the dimension".into(),
            ));
        }
        let mut dims = Vec::with_capacity(dim);
        let mut origin = Vec::with_capacity(dim);
        for k in 0..dim {
            if !(hi[k] > lo[k]) {
                return Err(Error::Geometry(format!(
                    "empty bounding box along axis {k}: [{}, {}]",
                    lo[k], hi[k]
                )));
            }
            let k_lo = (lo[k] / h + 1e-9).floor() as i64 - 1;
            let k_hi = (hi[k] / h - 1e-9).ceil() as i64 + 1;
            dims.push((k_hi - k_lo + 1) as usize);
            origin.push(k_lo as f64 * h);
        }
        Self::new(dim, &dims, h, &origin)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims[..self.dim]
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin[..self.dim]
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `h^n`, the measure of one quadrature cell.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i + self.dims[0] * j
    }

    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.dims[0], idx / self.dims[0])
    }

    pub fn position(&self, idx: usize) -> Point {
        let (i, j) = self.coords(idx);
        let mut p = [self.origin[0] + i as f64 * self.h, 0.0];
        if self.dim == 2 {
            p[1] = self.origin[1] + j as f64 * self.h;
        }
        p
    }

    /// Neighbour of `idx` one step along `axis` (`forward` or backward).
    pub fn neighbor(&self, idx: usize, axis: usize, forward: bool) -> Option<usize> {
        if axis >= self.dim {
            return None;
        }
        let (i, j) = self.coords(idx);
        let c = if axis == 0 { i } else { j };
        let n = self.dims[axis];
        let c2 = if forward {
            if c + 1 >= n {
                return None;
            }
            c + 1
        } else {
            c.checked_sub(1)?
        };
        Some(if axis == 0 {
            self.index(c2, j)
        } else {
            self.index(i, c2)
        })
    }

    /// Integer node coordinates of a physical point, possibly outside the
    /// lattice.
    pub fn signed_coords(&self, x: &Point) -> (i64, i64) {
        let i = ((x[0] - self.origin[0]) / self.h).round() as i64;
        let j = if self.dim == 2 {
            ((x[1] - self.origin[1]) / self.h).round() as i64
        } else {
            0
        };
        (i, j)
    }

    pub fn checked_index(&self, i: i64, j: i64) -> Option<usize> {
        if i < 0 || j < 0 || i as usize >= self.dims[0] || j as usize >= self.dims[1] {
            None
        } else {
            Some(self.index(i as usize, j as usize))
        }
    }

    /// Nearest lattice node, or `None` when `x` lies outside the lattice box.
    pub fn nearest(&self, x: &Point) -> Option<usize> {
        let (i, j) = self.signed_coords(x);
        self.checked_index(i, j)
    }

    /// Integer coordinates of every node of the infinite extension of this
    /// lattice lying in the closed ball `B(center, radius)`.
    pub fn ball_coords(&self, center: &Point, radius: f64) -> Vec<(i64, i64)> {
        let h = self.h;
        let ci = (center[0] - self.origin[0]) / h;
        let cj = if self.dim == 2 {
            (center[1] - self.origin[1]) / h
        } else {
            0.0
        };
        let rr = radius / h;
        let r2 = rr * rr * (1.0 + 1e-12);
        let mut out = Vec::new();
        let (j_lo, j_hi) = if self.dim == 2 {
            ((cj - rr).ceil() as i64, (cj + rr).floor() as i64)
        } else {
            (0, 0)
        };
        for j in j_lo..=j_hi {
            let dj = if self.dim == 2 { j as f64 - cj } else { 0.0 };
            let rem = r2 - dj * dj;
            if rem < 0.0 {
                continue;
            }
            let w = rem.sqrt();
            for i in (ci - w).ceil() as i64..=(ci + w).floor() as i64 {
                out.push((i, j));
            }
        }
        out
    }

    /// Lattice nodes inside the closed ball `B(center, radius)`.
    pub fn nodes_in_ball(&self, center: &Point, radius: f64) -> Vec<usize> {
        self.ball_coords(center, radius)
            .into_iter()
            .filter_map(|(i, j)| self.checked_index(i, j))
            .collect()
    }

    /// True when both lattices have the same spacing and their nodes coincide.
    pub fn is_aligned_with(&self, other: &Lattice) -> bool {
        if self.dim != other.dim || (self.h - other.h).abs() > 1e-12 * self.h {
            return false;
        }
        (0..self.dim).all(|k| {
            let shift = (self.origin[k] - other.origin[k]) / self.h;
            (shift - shift.round()).abs() < 1e-6
        })
    }

    /// Index in `self` of node `idx` of an aligned lattice `other`.
    pub fn translate_from(&self, other: &Lattice, idx: usize) -> Option<usize> {
        let p = other.position(idx);
        self.nearest(&p)
    }
}
