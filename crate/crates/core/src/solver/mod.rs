//! Discrete obstacle problems under generalized Orlicz growth.
//!
//! The default method is a projected Newton iteration: an ε-active set is
//! frozen at the obstacle, the remaining unknowns take an inexact Newton
//! step solved by Jacobi-preconditioned conjugate gradients, and an Armijo
//! search runs along the projection arc. Every iterate is feasible and the
//! smoothed energy never increases. For `φ` other than `t^2` the smoothing
//! `δ` is driven down to its target by continuation.

mod assembly;
mod checks;
mod problem;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::grid::ScalarField;
use assembly::{Assembly, Curvature};

pub use checks::{
    comparison_check, local_min_restriction_check, ComparisonReport, Hypotheses, RestrictionReport,
};
pub use problem::{energy, Obstacle, ObstacleProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ProjectedNewton,
    /// Diagonally scaled projected gradient with Armijo backtracking.
    ProjectedGradient,
    /// Projected nonlinear Gauss–Seidel, one node at a time.
    GaussSeidel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub max_iters: usize,
    /// Bound on the KKT residual `max |min(u - ψ, ∂E/∂u / h^n)|`.
    pub tol: f64,
    /// `None` starts from `max(ψ, f)`; `Some(seed)` from a random feasible
    /// field.
    pub seed: Option<u64>,
    /// Gauss–Seidel sweeps applied to the start before the main method.
    pub gauss_seidel_sweeps: usize,
    pub method: Method,
    /// Contact threshold; defaults to `1e-7 osc ψ`.
    pub contact_tol: Option<f64>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_iters: 500,
            tol: 1e-9,
            seed: None,
            gauss_seidel_sweeps: 0,
            method: Method::ProjectedNewton,
            contact_tol: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// Smoothed energy at the current `δ`.
    pub energy: f64,
    pub delta: f64,
    pub residual: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub u: ScalarField,
    /// Exact energy (`δ = 0`).
    pub energy: f64,
    /// Inside nodes with `u - ψ <= contact_tol`, ascending.
    pub contact: Vec<usize>,
    pub iterations: usize,
    pub converged: bool,
    pub kkt_residual: f64,
    pub contact_tol: f64,
    pub history: Vec<IterationRecord>,
}

const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 40;
const MAX_CG: usize = 2000;

struct State<'p> {
    asm: Assembly<'p>,
    lattice_len: usize,
    free: Vec<usize>,
    psi: Vec<f64>,
    vol: f64,
    u: Vec<f64>,
    g: Vec<f64>,
    curv: Vec<Curvature>,
    diag: Vec<f64>,
    terms: Vec<f64>,
    delta: f64,
}

impl<'p> State<'p> {
    fn new(problem: &'p ObstacleProblem, u: Vec<f64>, delta: f64) -> Result<Self> {
        let domain = problem.domain();
        let asm = Assembly::new(domain, domain.quadrature_cells(), problem.phi())?;
        let n = u.len();
        let psi = (0..n).map(|k| problem.obstacle().at(k)).collect();
        let mut s = Self {
            asm,
            lattice_len: n,
            free: domain.inside_nodes().to_vec(),
            psi,
            vol: domain.lattice().cell_volume(),
            u,
            g: vec![0.0; n],
            curv: Vec::new(),
            diag: vec![0.0; n],
            terms: Vec::new(),
            delta,
        };
        s.refresh();
        Ok(s)
    }

    fn refresh(&mut self) {
        self.asm
            .gradient(&self.u, self.delta, &mut self.g, &mut self.curv);
        self.asm.hessian_diagonal(&self.curv, &mut self.diag);
        self.terms = self.asm.energy_terms(&self.u, self.delta);
    }

    fn set_delta(&mut self, delta: f64) {
        self.delta = delta;
        self.refresh();
    }

    fn energy(&self) -> f64 {
        crate::grid::pairwise_sum(&self.terms)
    }

    fn residual_of(&self, u: &[f64], g: &[f64]) -> f64 {
        self.free
            .iter()
            .map(|&k| {
                let gr = g[k] / self.vol;
                if self.psi[k] == f64::NEG_INFINITY {
                    gr.abs()
                } else {
                    (u[k] - self.psi[k]).min(gr).abs()
                }
            })
            .fold(0.0, f64::max)
    }

    fn residual(&self) -> f64 {
        self.residual_of(&self.u, &self.g)
    }

    /// True when every node meets `tol` up to its own rounding level
    /// `16 ε (1 + |u_k|) H_kk / h^n`, the change in the scaled gradient
    /// caused by one rounding of `u_k`.
    fn meets(&self, tol: f64) -> bool {
        self.free.iter().all(|&k| {
            let gr = self.g[k] / self.vol;
            let r = if self.psi[k] == f64::NEG_INFINITY {
                gr.abs()
            } else {
                (self.u[k] - self.psi[k]).min(gr).abs()
            };
            r <= tol + 16.0 * f64::EPSILON * (1.0 + self.u[k].abs()) * self.diag[k] / self.vol
        })
    }

    fn project(&self, k: usize, x: f64) -> f64 {
        x.max(self.psi[k])
    }

    /// Energy change `E(trial) - E(u)` summed cell by cell, and the trial
    /// cell energies.
    fn energy_change(&self, trial: &[f64]) -> (f64, Vec<f64>) {
        let t = self.asm.energy_terms(trial, self.delta);
        let diff: Vec<f64> = t.iter().zip(&self.terms).map(|(a, b)| a - b).collect();
        (crate::grid::pairwise_sum(&diff), t)
    }

    /// Scale of the rounding error in an energy difference.
    fn energy_noise(&self) -> f64 {
        64.0 * f64::EPSILON * self.terms.iter().map(|t| t.abs()).sum::<f64>()
    }

    fn accept(&mut self, trial: Vec<f64>, terms: Vec<f64>) {
        self.u = trial;
        self.asm
            .gradient(&self.u, self.delta, &mut self.g, &mut self.curv);
        self.asm.hessian_diagonal(&self.curv, &mut self.diag);
        self.terms = terms;
    }

    /// Searches along `P(u + α d)`. `model(α, trial)` is the predicted
    /// decrease used by the Armijo test. Returns the accepted step.
    fn arc_search(
        &mut self,
        d: &[f64],
        alpha0: f64,
        model: impl Fn(f64, &[f64]) -> f64,
    ) -> Option<f64> {
        let mut alpha = alpha0;
        let noise = self.energy_noise();
        let mut trial = self.u.clone();
        let mut g = vec![0.0; self.lattice_len];
        let mut curv = Vec::new();
        for _ in 0..MAX_BACKTRACKS {
            for &k in &self.free {
                trial[k] = self.project(k, self.u[k] + alpha * d[k]);
            }
            let (de, terms) = self.energy_change(&trial);
            let predicted = model(alpha, &trial);
            if -de >= ARMIJO * predicted && predicted > 0.0 {
                self.accept(trial, terms);
                return Some(alpha);
            }
            // At rounding level the energy cannot rank iterates. On the
            // segment from u to the trial point a convex energy decreases as
            // long as its directional derivative at the far end is
            // nonpositive.
            if de.abs() <= noise {
                self.asm.gradient(&trial, self.delta, &mut g, &mut curv);
                let slope: f64 = self
                    .free
                    .iter()
                    .map(|&k| g[k] * (trial[k] - self.u[k]))
                    .sum();
                let moved = self.free.iter().any(|&k| trial[k] != self.u[k]);
                if moved && slope <= 0.0 {
                    self.accept(trial, terms);
                    return Some(alpha);
                }
            }
            alpha *= 0.5;
        }
        None
    }

    fn gradient_step(&mut self, alpha0: f64) -> Option<f64> {
        let d: Vec<f64> = (0..self.lattice_len)
            .map(|k| {
                if self.diag[k] > 0.0 {
                    -self.g[k] / self.diag[k]
                } else {
                    0.0
                }
            })
            .collect();
        let u = self.u.clone();
        let g = self.g.clone();
        let free = self.free.clone();
        self.arc_search(&d, alpha0, move |_, trial| {
            free.iter().map(|&k| g[k] * (u[k] - trial[k])).sum()
        })
    }

    fn newton_step(&mut self, forcing: f64) -> Option<f64> {
        let w = self
            .free
            .iter()
            .map(|&k| {
                let step = if self.diag[k] > 0.0 {
                    self.g[k] / self.diag[k]
                } else {
                    0.0
                };
                (self.u[k] - self.project(k, self.u[k] - step)).abs()
            })
            .fold(0.0, f64::max);
        let eps_active = w.min(1e-3);
        let active: Vec<bool> = self
            .free
            .iter()
            .map(|&k| self.u[k] - self.psi[k] <= eps_active && self.g[k] > 0.0)
            .collect();
        let inactive: Vec<usize> = self
            .free
            .iter()
            .zip(&active)
            .filter(|(_, &a)| !a)
            .map(|(&k, _)| k)
            .collect();

        let mut d = vec![0.0; self.lattice_len];
        for (&k, &a) in self.free.iter().zip(&active) {
            if a && self.diag[k] > 0.0 {
                d[k] = -self.g[k] / self.diag[k];
            }
        }
        if !inactive.is_empty() {
            let sol = self.cg(&inactive, forcing);
            for (i, &k) in inactive.iter().enumerate() {
                d[k] = sol[i];
            }
        }
        let u = self.u.clone();
        let g = self.g.clone();
        let free = self.free.clone();
        let act = active.clone();
        let d_model = d.clone();
        self.arc_search(&d, 1.0, move |alpha, trial| {
            free.iter()
                .zip(&act)
                .map(|(&k, &a)| {
                    if a {
                        g[k] * (u[k] - trial[k])
                    } else {
                        -alpha * g[k] * d_model[k]
                    }
                })
                .sum()
        })
    }

    /// Solves `H_FF x = -g_F` approximately by Jacobi-preconditioned CG.
    fn cg(&self, set: &[usize], forcing: f64) -> Vec<f64> {
        let m = set.len();
        let dmax = set.iter().map(|&k| self.diag[k]).fold(0.0, f64::max);
        let mu = 1e-12 * dmax.max(f64::MIN_POSITIVE);
        let precond: Vec<f64> = set.iter().map(|&k| 1.0 / (self.diag[k] + mu)).collect();
        let mut full = vec![0.0; self.lattice_len];
        let mut hv = vec![0.0; self.lattice_len];
        let mut apply = |p: &[f64], out: &mut [f64]| {
            for (i, &k) in set.iter().enumerate() {
                full[k] = p[i];
            }
            self.asm.hessian_apply(&self.curv, &full, &mut hv);
            for (i, &k) in set.iter().enumerate() {
                out[i] = hv[k] + mu * p[i];
                full[k] = 0.0;
            }
        };
        let mut x = vec![0.0; m];
        let mut r: Vec<f64> = set.iter().map(|&k| -self.g[k]).collect();
        let r0 = norm(&r);
        if r0 == 0.0 {
            return x;
        }
        let mut z: Vec<f64> = r.iter().zip(&precond).map(|(a, b)| a * b).collect();
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let mut ap = vec![0.0; m];
        for _ in 0..MAX_CG {
            apply(&p, &mut ap);
            let pap = dot(&p, &ap);
            if !(pap > 0.0) {
                break;
            }
            let a = rz / pap;
            for i in 0..m {
                x[i] += a * p[i];
                r[i] -= a * ap[i];
            }
            if norm(&r) <= forcing * r0 {
                break;
            }
            for i in 0..m {
                z[i] = r[i] * precond[i];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..m {
                p[i] = z[i] + beta * p[i];
            }
        }
        x
    }

    /// One projected Gauss–Seidel sweep in lattice order; returns the
    /// largest change.
    fn gauss_seidel_sweep(&mut self, lattice: &crate::grid::Lattice) -> f64 {
        let mut largest: f64 = 0.0;
        let mut cells: Vec<usize> = Vec::with_capacity(3);
        for idx in 0..self.free.len() {
            let k = self.free[idx];
            cells.clear();
            cells.extend(self.asm.cells_touching(lattice, k));
            let start = self.u[k];
            let (mut e, mut d1, mut d2) = self.asm.local_node_terms(&self.u, k, &cells, self.delta);
            for _ in 0..30 {
                if !(d2 > 0.0) || d1 == 0.0 {
                    break;
                }
                let t = self.u[k];
                let mut step = -d1 / d2;
                let mut moved = false;
                for _ in 0..30 {
                    let cand = self.project(k, t + step);
                    self.u[k] = cand;
                    let (e2, a, b) = self.asm.local_node_terms(&self.u, k, &cells, self.delta);
                    if e2 <= e {
                        e = e2;
                        d1 = a;
                        d2 = b;
                        moved = cand != t;
                        break;
                    }
                    self.u[k] = t;
                    step *= 0.5;
                }
                if !moved || (self.u[k] - t).abs() <= 1e-15 * (1.0 + t.abs()) {
                    break;
                }
            }
            largest = largest.max((self.u[k] - start).abs());
        }
        self.refresh();
        largest
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Random feasible start: `max(ψ, f + noise)` with noise of the size of the
/// data oscillation.
fn random_start(problem: &ObstacleProblem, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amp = problem.gradient_scale() * problem.domain().diameter();
    let mut u = problem.boundary().values().to_vec();
    for &k in problem.domain().inside_nodes() {
        let noise: f64 = rng.random_range(-amp..=amp);
        u[k] = (u[k] + noise).max(problem.obstacle().at(k));
    }
    u
}

/// Decreasing smoothing levels ending at the problem's `δ`.
fn delta_schedule(problem: &ObstacleProblem) -> Vec<f64> {
    if problem.phi().is_quadratic() {
        return vec![0.0];
    }
    let target = problem.delta();
    let mut d = 1e-2 * problem.gradient_scale();
    let mut out = Vec::new();
    while d > target * 10.0 {
        out.push(d);
        d *= 0.01;
    }
    out.push(target);
    out
}

/// Default contact threshold `1e-7 osc ψ` over inside nodes.
fn default_contact_tol(problem: &ObstacleProblem) -> f64 {
    match problem.obstacle() {
        Obstacle::None => 0.0,
        Obstacle::Field(psi) => {
            let (lo, hi) = problem
                .domain()
                .inside_nodes()
                .iter()
                .map(|&k| psi.get(k))
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
                    (a.min(v), b.max(v))
                });
            let osc = hi - lo;
            if osc > 0.0 {
                1e-7 * osc
            } else {
                1e-7 * hi.abs().max(1.0)
            }
        }
    }
}

/// Minimises the discrete energy over the admissible set.
///
/// A run that exhausts `max_iters` returns the last iterate with
/// `converged = false`.
pub fn solve(problem: &ObstacleProblem, options: &SolveOptions) -> Result<Solution> {
    let start = match options.seed {
        None => problem.feasible_start().into_values(),
        Some(seed) => random_start(problem, seed),
    };
    let schedule = delta_schedule(problem);
    let lattice = problem.domain().lattice().clone();
    let mut st = State::new(problem, start, schedule[0])?;
    let mut history = Vec::new();
    let mut iterations = 0;

    for _ in 0..options.gauss_seidel_sweeps {
        st.gauss_seidel_sweep(&lattice);
    }

    let mut converged = false;
    let mut residual = st.residual();
    for (stage, &delta) in schedule.iter().enumerate() {
        if stage > 0 {
            st.set_delta(delta);
        }
        let last = stage + 1 == schedule.len();
        let stage_tol = if last {
            options.tol
        } else {
            options.tol.max(1e-6)
        };
        let r_first = st.residual().max(f64::MIN_POSITIVE);
        let mut pg_alpha: f64 = 1.0;
        loop {
            residual = st.residual();
            if st.meets(stage_tol) {
                converged = last;
                break;
            }
            if iterations >= options.max_iters {
                break;
            }
            iterations += 1;
            let step = match options.method {
                Method::ProjectedNewton => {
                    let forcing = (residual / r_first).clamp(1e-10, 0.1);
                    st.newton_step(forcing).or_else(|| st.gradient_step(1.0))
                }
                Method::ProjectedGradient => {
                    let s = st.gradient_step((2.0 * pg_alpha).min(1e3));
                    if let Some(a) = s {
                        pg_alpha = a;
                    }
                    s
                }
                Method::GaussSeidel => Some(st.gauss_seidel_sweep(&lattice)),
            };
            history.push(IterationRecord {
                energy: st.energy(),
                delta,
                residual: st.residual(),
                step: step.unwrap_or(0.0),
            });
            if step.is_none() {
                break;
            }
        }
        if iterations >= options.max_iters && !converged {
            break;
        }
    }
    let residual_final = st.residual();
    if residual_final < residual {
        residual = residual_final;
    }

    let u = ScalarField::new(lattice, st.u)?;
    let contact_tol = options
        .contact_tol
        .unwrap_or_else(|| default_contact_tol(problem));
    let contact = match problem.obstacle() {
        Obstacle::None => Vec::new(),
        Obstacle::Field(psi) => problem
            .domain()
            .inside_nodes()
            .iter()
            .copied()
            .filter(|&k| u.get(k) - psi.get(k) <= contact_tol)
            .collect(),
    };
    Ok(Solution {
        energy: problem.energy(&u)?,
        u,
        contact,
        iterations,
        converged,
        kkt_residual: residual,
        contact_tol,
        history,
    })
}
