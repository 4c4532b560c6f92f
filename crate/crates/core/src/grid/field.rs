use super::lattice::{Lattice, Point};
use crate::error::{Error, Result};

/// Grid function: one finite value per lattice node.
///
/// Inside nodes carry the unknowns; the remaining nodes carry boundary data
/// or the zero extension of the field.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    lattice: Lattice,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(lattice: Lattice, values: Vec<f64>) -> Result<Self> {
        if values.len() != lattice.len() {
            return Err(Error::Argument(format!(
                "field has {} values for a lattice of {} nodes",
                values.len(),
                lattice.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "field value at node {k} (x = {:?}) is not finite",
                lattice.position(k)
            )));
        }
        Ok(Self { lattice, values })
    }

    pub fn constant(lattice: &Lattice, c: f64) -> Self {
        Self {
            values: vec![c; lattice.len()],
            lattice: lattice.clone(),
        }
    }

    pub fn zeros(lattice: &Lattice) -> Self {
        Self::constant(lattice, 0.0)
    }

    /// Samples `f` at every node. Fails if `f` returns a non-finite value.
    pub fn from_fn(lattice: &Lattice, f: impl Fn(&Point) -> f64) -> Result<Self> {
        let values = (0..lattice.len())
            .map(|k| f(&lattice.position(k)))
            .collect();
        Self::new(lattice.clone(), values)
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(
            self.lattice.clone(),
            self.values.iter().map(|&v| f(v)).collect(),
        )
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            lattice: self.lattice.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    /// Multilinear interpolation. Points outside the lattice box are a
    /// domain error.
    pub fn interpolate(&self, x: &Point) -> Result<f64> {
        let l = &self.lattice;
        let h = l.h();
        let mut base = [0usize; 2];
        let mut frac = [0.0f64; 2];
        for k in 0..l.dim() {
            let s = (x[k] - l.origin()[k]) / h;
            let n = l.dims()[k];
            let tol = 1e-9;
            if !(s >= -tol && s <= (n - 1) as f64 + tol) {
                return Err(Error::Domain(format!(
                    "point {:?} lies outside the support of the sampled field",
                    &x[..l.dim()]
                )));
            }
            let s = s.clamp(0.0, (n - 1) as f64);
            let b = (s.floor() as usize).min(n - 2);
            base[k] = b;
            frac[k] = s - b as f64;
        }
        if l.dim() == 1 {
            let v0 = self.values[base[0]];
            let v1 = self.values[base[0] + 1];
            return Ok(v0 + frac[0] * (v1 - v0));
        }
        let v = |di: usize, dj: usize| self.values[l.index(base[0] + di, base[1] + dj)];
        let (fx, fy) = (frac[0], frac[1]);
        Ok((1.0 - fx) * (1.0 - fy) * v(0, 0)
            + fx * (1.0 - fy) * v(1, 0)
            + (1.0 - fx) * fy * v(0, 1)
            + fx * fy * v(1, 1))
    }
}

/// Per-node gradient vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    lattice: Lattice,
    components: Vec<[f64; 2]>,
}

impl VectorField {
    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn get(&self, idx: usize) -> [f64; 2] {
        self.components[idx]
    }

    pub fn components(&self) -> &[[f64; 2]] {
        &self.components
    }

    pub fn magnitude(&self, idx: usize) -> f64 {
        let g = self.components[idx];
        g[0].hypot(g[1])
    }
}

/// Forward differences `(u_{i+1} - u_i) / h` along each axis; the last node
/// of an axis uses the backward difference.
pub fn discrete_gradient(field: &ScalarField) -> VectorField {
    let l = field.lattice();
    let h = l.h();
    let u = field.values();
    let components = (0..l.len())
        .map(|idx| {
            let mut g = [0.0; 2];
            for (axis, gk) in g.iter_mut().enumerate().take(l.dim()) {
                *gk = match l.neighbor(idx, axis, true) {
                    Some(f) => (u[f] - u[idx]) / h,
                    None => {
                        let b = l.neighbor(idx, axis, false).expect("axes have >= 2 nodes");
                        (u[idx] - u[b]) / h
                    }
                };
            }
            g
        })
        .collect();
    VectorField {
        lattice: l.clone(),
        components,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gradient_of_linear_1d_field_uses_backward_difference_at_the_end() {
        let l = Lattice::new(1, &[3], 0.5, &[0.0]).unwrap();
        let f = ScalarField::new(l, vec![0.0, 1.0, 2.0]).unwrap();
        let g = discrete_gradient(&f);
        for k in 0..3 {
            assert_eq!(g.get(k)[0], 2.0);
        }
    }

    #[test]
    fn gradient_of_constant_is_zero() {
        let l = Lattice::covering(2, &[0.0, 0.0], &[1.0, 1.0], 0.125).unwrap();
        let f = ScalarField::constant(&l, 3.5);
        let g = discrete_gradient(&f);
        assert!(g.components().iter().all(|c| c == &[0.0, 0.0]));
    }

    #[test]
    fn forward_difference_of_squares() {
        let l = Lattice::covering(2, &[0.0, 0.0], &[1.0, 1.0], 0.1).unwrap();
        let f = ScalarField::from_fn(&l, |x| x[0] * x[0]).unwrap();
        let g = discrete_gradient(&f);
        let idx = l.nearest(&[0.3, 0.5]).unwrap();
        assert_abs_diff_eq!(g.get(idx)[0], 0.7, epsilon = 1e-12);
        assert_abs_diff_eq!(g.get(idx)[1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn interpolation_is_exact_for_bilinear_data() {
        let l = Lattice::covering(2, &[0.0, 0.0], &[1.0, 1.0], 0.25).unwrap();
        let f = ScalarField::from_fn(&l, |x| 1.0 + 2.0 * x[0] - x[1] + x[0] * x[1]).unwrap();
        let v = f.interpolate(&[0.33, 0.71]).unwrap();
        assert_abs_diff_eq!(v, 1.0 + 0.66 - 0.71 + 0.33 * 0.71, epsilon = 1e-12);
        assert!(f.interpolate(&[5.0, 0.0]).is_err());
    }

    #[test]
    fn rejects_non_finite_values() {
        let l = Lattice::new(1, &[2], 1.0, &[0.0]).unwrap();
        assert!(ScalarField::new(l, vec![0.0, f64::NAN]).is_err());
    }
}
