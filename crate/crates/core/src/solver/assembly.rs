//! Cell-wise energy, gradient and Hessian of the discrete functional.
//!
//! Cell `c` contributes `φ(x_c, s_c) h^n` with `s_c = sqrt(|G_c|^2 + δ^2)`
//! and `G_c = (u[c + e_k] - u[c]) / h`. Per-cell terms are computed in
//! parallel and scattered to nodes sequentially in cell order, so every
//! result is bitwise reproducible.

use rayon::prelude::*;

use crate::error::Result;
use crate::grid::{pairwise_sum, Domain, Lattice};
use crate::phi::{LocalPhi, PhiFunction};

/// Sentinel for "no cell" in node-to-cell maps.
const NONE: u32 = u32::MAX;

pub(crate) struct Assembly<'a> {
    dim: usize,
    h: f64,
    vol: f64,
    /// `[c, c + e_1, c + e_2]`, lattice indices.
    stencil: Vec<[usize; 3]>,
    local: Vec<LocalPhi<'a>>,
    /// Lattice index to cell position, [`NONE`] for nodes without a cell.
    cell_of: Vec<u32>,
}

/// Symmetric `n x n` curvature `W` of one cell, stored as `[w11, w12, w22]`.
pub(crate) type Curvature = [f64; 3];

impl<'a> Assembly<'a> {
    pub(crate) fn new(domain: &Domain, cells: &[usize], phi: &'a PhiFunction) -> Result<Self> {
        Self::on_lattice(domain.lattice(), cells, phi)
    }

    pub(crate) fn on_lattice(
        lattice: &Lattice,
        cells: &[usize],
        phi: &'a PhiFunction,
    ) -> Result<Self> {
        let dim = lattice.dim();
        let stencil: Vec<[usize; 3]> = cells
            .iter()
            .map(|&c| {
                let mut s = [c; 3];
                for k in 0..dim {
                    s[k + 1] = lattice
                        .neighbor(c, k, true)
                        .expect("quadrature cells have forward neighbours");
                }
                s
            })
            .collect();
        let local = cells
            .par_iter()
            .map(|&c| phi.local_at_node(lattice, c))
            .collect::<Result<Vec<_>>>()?;
        let mut cell_of = vec![NONE; lattice.len()];
        for (p, &c) in cells.iter().enumerate() {
            cell_of[c] = p as u32;
        }
        Ok(Self {
            dim,
            h: lattice.h(),
            vol: lattice.cell_volume(),
            stencil,
            local,
            cell_of,
        })
    }

    /// `lim φ'(s)/s` as `s -> 0`, evaluated at the smallest normal `s`;
    /// 0 when the limit is infinite.
    fn curvature_at_zero(&self, p: usize) -> f64 {
        let (_, d2) = self.local[p].derivatives(f64::MIN_POSITIVE);
        if d2.is_finite() {
            d2
        } else {
            0.0
        }
    }

    #[inline]
    fn grad(&self, u: &[f64], p: usize) -> [f64; 2] {
        let s = &self.stencil[p];
        let mut g = [0.0; 2];
        for k in 0..self.dim {
            g[k] = (u[s[k + 1]] - u[s[0]]) / self.h;
        }
        g
    }

    #[inline]
    fn cell_energy(&self, u: &[f64], p: usize, delta: f64) -> f64 {
        let g = self.grad(u, p);
        let s = (g[0] * g[0] + g[1] * g[1] + delta * delta).sqrt();
        self.local[p].value(s) * self.vol
    }

    pub(crate) fn energy_terms(&self, u: &[f64], delta: f64) -> Vec<f64> {
        (0..self.stencil.len())
            .into_par_iter()
            .map(|p| self.cell_energy(u, p, delta))
            .collect()
    }

    pub(crate) fn energy(&self, u: &[f64], delta: f64) -> f64 {
        pairwise_sum(&self.energy_terms(u, delta))
    }

    /// Gradient with respect to every lattice node (fixed nodes included)
    /// and per-cell curvatures.
    pub(crate) fn gradient(&self, u: &[f64], delta: f64, g: &mut [f64], curv: &mut Vec<Curvature>) {
        let per_cell: Vec<([f64; 2], Curvature)> = (0..self.stencil.len())
            .into_par_iter()
            .map(|p| {
                let gr = self.grad(u, p);
                let s2 = gr[0] * gr[0] + gr[1] * gr[1] + delta * delta;
                let s = s2.sqrt();
                if s == 0.0 {
                    let a = self.curvature_at_zero(p) * self.vol;
                    return ([0.0; 2], [a, 0.0, a]);
                }
                let (d1, d2) = self.local[p].derivatives(s);
                let a = d1 / s;
                let b = (d2 - a) / s2;
                let q = [a * gr[0] * self.vol, a * gr[1] * self.vol];
                let w = [
                    (a + b * gr[0] * gr[0]) * self.vol,
                    b * gr[0] * gr[1] * self.vol,
                    (a + b * gr[1] * gr[1]) * self.vol,
                ];
                (q, w)
            })
            .collect();
        g.iter_mut().for_each(|x| *x = 0.0);
        curv.clear();
        curv.reserve(per_cell.len());
        for (p, (q, w)) in per_cell.into_iter().enumerate() {
            let s = &self.stencil[p];
            for k in 0..self.dim {
                let t = q[k] / self.h;
                g[s[k + 1]] += t;
                g[s[0]] -= t;
            }
            curv.push(w);
        }
    }

    /// `out = H v` for the Hessian assembled from `curv`.
    pub(crate) fn hessian_apply(&self, curv: &[Curvature], v: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        let h2 = self.h * self.h;
        for (p, w) in curv.iter().enumerate() {
            let s = &self.stencil[p];
            let d0 = v[s[1]] - v[s[0]];
            if self.dim == 1 {
                let t = w[0] * d0 / h2;
                out[s[1]] += t;
                out[s[0]] -= t;
            } else {
                let d1 = v[s[2]] - v[s[0]];
                let t0 = (w[0] * d0 + w[1] * d1) / h2;
                let t1 = (w[1] * d0 + w[2] * d1) / h2;
                out[s[1]] += t0;
                out[s[2]] += t1;
                out[s[0]] -= t0 + t1;
            }
        }
    }

    /// Diagonal of the Hessian.
    pub(crate) fn hessian_diagonal(&self, curv: &[Curvature], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        let h2 = self.h * self.h;
        for (p, w) in curv.iter().enumerate() {
            let s = &self.stencil[p];
            if self.dim == 1 {
                out[s[0]] += w[0] / h2;
                out[s[1]] += w[0] / h2;
            } else {
                out[s[0]] += (w[0] + 2.0 * w[1] + w[2]) / h2;
                out[s[1]] += w[0] / h2;
                out[s[2]] += w[2] / h2;
            }
        }
    }

    /// Cells whose stencil contains node `k`.
    pub(crate) fn cells_touching(
        &self,
        lattice: &Lattice,
        k: usize,
    ) -> impl Iterator<Item = usize> + '_ {
        let mut out = [NONE; 3];
        out[0] = self.cell_of[k];
        for axis in 0..self.dim {
            if let Some(b) = lattice.neighbor(k, axis, false) {
                out[axis + 1] = self.cell_of[b];
            }
        }
        out.into_iter().filter(|&p| p != NONE).map(|p| p as usize)
    }

    /// Energy of the given cells and its first two derivatives with respect
    /// to `u[k]`.
    pub(crate) fn local_node_terms(
        &self,
        u: &[f64],
        k: usize,
        cells: &[usize],
        delta: f64,
    ) -> (f64, f64, f64) {
        let (mut e, mut d1s, mut d2s) = (0.0, 0.0, 0.0);
        for &p in cells {
            let s = &self.stencil[p];
            let gr = self.grad(u, p);
            // dG/du_k for this cell.
            let mut dg = [0.0; 2];
            for axis in 0..self.dim {
                if s[axis + 1] == k {
                    dg[axis] += 1.0 / self.h;
                }
                if s[0] == k {
                    dg[axis] -= 1.0 / self.h;
                }
            }
            let s2 = gr[0] * gr[0] + gr[1] * gr[1] + delta * delta;
            let sv = s2.sqrt();
            e += self.local[p].value(sv) * self.vol;
            if sv == 0.0 {
                d2s += self.curvature_at_zero(p) * (dg[0] * dg[0] + dg[1] * dg[1]) * self.vol;
                continue;
            }
            let (f1, f2) = self.local[p].derivatives(sv);
            let a = f1 / sv;
            let b = (f2 - a) / s2;
            let gd = gr[0] * dg[0] + gr[1] * dg[1];
            let dd = dg[0] * dg[0] + dg[1] * dg[1];
            d1s += a * gd * self.vol;
            d2s += (a * dd + b * gd * gd) * self.vol;
        }
        (e, d1s, d2s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{ScalarField, Shape};
    use crate::phi::Coefficient;

    fn setup() -> (Domain, PhiFunction, Vec<f64>) {
        let d = Domain::from_shape(
            &Shape::Disk {
                center: [0.0, 0.0],
                radius: 1.0,
            },
            0.125,
        )
        .unwrap();
        let phi =
            PhiFunction::double_phase(1.5, 2.5, Coefficient::from_fn(|x| 1.0 + x[0])).unwrap();
        let u = ScalarField::from_fn(d.lattice(), |x| (3.0 * x[0]).sin() + x[1] * x[1]).unwrap();
        (d, phi, u.into_values())
    }

    #[test]
    fn gradient_and_hessian_match_finite_differences() {
        let (d, phi, u) = setup();
        let asm = Assembly::new(&d, d.quadrature_cells(), &phi).unwrap();
        let delta = 1e-3;
        let mut g = vec![0.0; u.len()];
        let mut curv = Vec::new();
        asm.gradient(&u, delta, &mut g, &mut curv);
        let v: Vec<f64> = (0..u.len())
            .map(|k| ((k * 7919) % 13) as f64 / 13.0 - 0.5)
            .collect();
        let mut hv = vec![0.0; u.len()];
        asm.hessian_apply(&curv, &v, &mut hv);

        let eps = 1e-6;
        let shifted = |t: f64| -> Vec<f64> { u.iter().zip(&v).map(|(a, b)| a + t * b).collect() };
        let de =
            (asm.energy(&shifted(eps), delta) - asm.energy(&shifted(-eps), delta)) / (2.0 * eps);
        let gv: f64 = g.iter().zip(&v).map(|(a, b)| a * b).sum();
        assert!((de - gv).abs() < 1e-6 * (1.0 + gv.abs()), "{de} {gv}");

        let mut gp = vec![0.0; u.len()];
        let mut gm = vec![0.0; u.len()];
        let mut tmp = Vec::new();
        asm.gradient(&shifted(eps), delta, &mut gp, &mut tmp);
        asm.gradient(&shifted(-eps), delta, &mut gm, &mut tmp);
        for k in 0..u.len() {
            let fd = (gp[k] - gm[k]) / (2.0 * eps);
            assert!(
                (fd - hv[k]).abs() < 1e-5 * (1.0 + hv[k].abs()),
                "node {k}: {fd} {}",
                hv[k]
            );
        }

        let mut diag = vec![0.0; u.len()];
        asm.hessian_diagonal(&curv, &mut diag);
        let k = d.inside_nodes()[10];
        let mut e = vec![0.0; u.len()];
        e[k] = 1.0;
        asm.hessian_apply(&curv, &e, &mut hv);
        assert!((hv[k] - diag[k]).abs() < 1e-10 * diag[k]);
    }

    #[test]
    fn local_node_terms_match_global_derivatives() {
        let (d, phi, u) = setup();
        let asm = Assembly::new(&d, d.quadrature_cells(), &phi).unwrap();
        let delta = 1e-3;
        let mut g = vec![0.0; u.len()];
        let mut curv = Vec::new();
        asm.gradient(&u, delta, &mut g, &mut curv);
        let mut diag = vec![0.0; u.len()];
        asm.hessian_diagonal(&curv, &mut diag);
        for &k in d.inside_nodes().iter().step_by(17) {
            let cells: Vec<usize> = asm.cells_touching(d.lattice(), k).collect();
            let (_, d1, d2) = asm.local_node_terms(&u, k, &cells, delta);
            assert!((d1 - g[k]).abs() < 1e-12 * (1.0 + g[k].abs()));
            assert!((d2 - diag[k]).abs() < 1e-9 * (1.0 + diag[k]));
        }
    }
}
