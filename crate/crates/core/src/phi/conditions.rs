//! Sampling certificates for (A0), (A1), (A1-n), (aInc)_p and (aDec)_q.
//!
//! Every checker works on explicit grids and returns a [`ConditionReport`];
//! a failing report always carries a [`Violation`] whose
//! [`Violation::reproduces`] re-evaluates `φ` and confirms it.

use rayon::prelude::*;

use super::{left_inverse_of, LocalPhi, PhiFunction};
use crate::error::{Error, Result};
use crate::grid::{Ball, Domain, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Condition {
    A0,
    A1,
    A1n,
    AIncP,
    ADecQ,
}

impl Condition {
    pub fn name(&self) -> &'static str {
        match self {
            Condition::A0 => "A0",
            Condition::A1 => "A1",
            Condition::A1n => "A1n",
            Condition::AIncP => "aInc",
            Condition::ADecQ => "aDec",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Monotonicity {
    Inc,
    Dec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum A1Mode {
    /// `t` ranges over `[1, (φ⁻_B)⁻¹(1/|B|)]`.
    A1,
    /// `t` ranges over `[1, 1/diam B]`.
    A1n,
}

/// A concrete sample at which a condition fails.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// (A0) at `x`: `φ(x, t) > 1` when `upper`, `φ(x, t) < 1` otherwise.
    Level { x: Point, t: f64, upper: bool },
    /// Almost-monotonicity of `φ(x, ·)/t^exponent` fails for `s < t`
    /// with constant `l`.
    Pair {
        x: Point,
        s: f64,
        t: f64,
        exponent: f64,
        mode: Monotonicity,
        l: f64,
    },
    /// `φ(x_sup, βt) > φ(x_inf, t)` with both points in the ball.
    Ball {
        center: Point,
        radius: f64,
        beta: f64,
        t: f64,
        x_sup: Point,
        x_inf: Point,
    },
}

impl Violation {
    /// Re-evaluates `φ` at the stored sample and reports whether the
    /// violation is still present.
    pub fn reproduces(&self, phi: &PhiFunction) -> bool {
        let eval = |x: &Point, t: f64| phi.local(x).map(|l| l.value(t)).unwrap_or(f64::NAN);
        match self {
            Violation::Level { x, t, upper } => {
                let v = eval(x, *t);
                if *upper {
                    v > 1.0
                } else {
                    v < 1.0
                }
            }
            Violation::Pair {
                x,
                s,
                t,
                exponent,
                mode,
                l,
            } => {
                let gs = eval(x, *s) / s.powf(*exponent);
                let gt = eval(x, *t) / t.powf(*exponent);
                match mode {
                    Monotonicity::Inc => gs > l * gt,
                    Monotonicity::Dec => gt > l * gs,
                }
            }
            Violation::Ball {
                beta,
                t,
                x_sup,
                x_inf,
                ..
            } => eval(x_sup, beta * t) > eval(x_inf, *t),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub condition: Condition,
    pub holds: bool,
    /// Largest admissible sampled `β` for (A0)/(A1)/(A1-n), 0 when none
    /// works; smallest admissible `L` for (aInc)/(aDec).
    pub witness: f64,
    pub violation: Option<Violation>,
    /// Number of sampled points (A0, aInc, aDec) or balls (A1, A1-n).
    pub samples: usize,
    /// Balls skipped because their radius is below the grid spacing.
    pub skipped: usize,
}

impl ConditionReport {
    /// True when the report is internally consistent: failing reports carry
    /// a violation that re-evaluates as one.
    pub fn reproduces(&self, phi: &PhiFunction) -> bool {
        match (&self.violation, self.holds) {
            (None, true) => true,
            (Some(v), false) => v.reproduces(phi),
            _ => false,
        }
    }
}

/// `1 - 2^{-k}` for `k = 1..=10`, ascending.
pub fn default_beta_grid() -> Vec<f64> {
    (1..=10).map(|k| 1.0 - 0.5f64.powi(k)).collect()
}

/// `count` geometrically spaced points from `lo` to `hi`, both included.
pub fn geometric_grid(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
        return Err(Error::Argument(format!("bad geometric range [{lo}, {hi}]")));
    }
    if count == 0 || (count == 1 && hi > lo) {
        return Err(Error::Argument(
            "geometric grid needs at least two points".into(),
        ));
    }
    if count == 1 {
        return Ok(vec![lo]);
    }
    let ratio = (hi / lo).ln() / (count - 1) as f64;
    let mut g: Vec<f64> = (0..count).map(|k| lo * (ratio * k as f64).exp()).collect();
    g[count - 1] = hi;
    Ok(g)
}

fn validate_beta_grid(beta_grid: &[f64]) -> Result<Vec<f64>> {
    if beta_grid.is_empty() {
        return Err(Error::Argument("beta grid is empty".into()));
    }
    if beta_grid.iter().any(|&b| !(b > 0.0 && b < 1.0)) {
        return Err(Error::Argument("beta grid must lie in (0, 1)".into()));
    }
    let mut g = beta_grid.to_vec();
    g.sort_by(f64::total_cmp);
    g.dedup();
    Ok(g)
}

/// Every `k`-th element so that at most `max` remain; the last element is
/// always kept.
fn subsample(nodes: &[usize], max: usize) -> Vec<usize> {
    if nodes.len() <= max || max == 0 {
        return nodes.to_vec();
    }
    let stride = nodes.len().div_ceil(max);
    let mut out: Vec<usize> = nodes.iter().copied().step_by(stride).collect();
    if out.last() != nodes.last() {
        out.push(*nodes.last().expect("nonempty"));
    }
    out
}

fn locals<'a>(phi: &'a PhiFunction, domain: &Domain, nodes: &[usize]) -> Result<Vec<LocalPhi<'a>>> {
    nodes
        .iter()
        .map(|&k| phi.local_at_node(domain.lattice(), k))
        .collect()
}

/// (A0): the largest `β` in the grid with `sup_x φ(x, β) <= 1 <= inf_x φ(x, 1/β)`
/// over all inside nodes.
pub fn check_a0(phi: &PhiFunction, domain: &Domain, beta_grid: &[f64]) -> Result<ConditionReport> {
    let betas = validate_beta_grid(beta_grid)?;
    let nodes = domain.inside_nodes();
    let loc = locals(phi, domain, nodes)?;
    let lattice = domain.lattice();
    let first_violation = |beta: f64| -> Option<Violation> {
        for (k, l) in nodes.iter().zip(&loc) {
            let x = lattice.position(*k);
            if !(l.value(beta) <= 1.0) {
                return Some(Violation::Level {
                    x,
                    t: beta,
                    upper: true,
                });
            }
            if !(l.value(1.0 / beta) >= 1.0) {
                return Some(Violation::Level {
                    x,
                    t: 1.0 / beta,
                    upper: false,
                });
            }
        }
        None
    };
    for &beta in betas.iter().rev() {
        if first_violation(beta).is_none() {
            return Ok(ConditionReport {
                condition: Condition::A0,
                holds: true,
                witness: beta,
                violation: None,
                samples: nodes.len(),
                skipped: 0,
            });
        }
    }
    Ok(ConditionReport {
        condition: Condition::A0,
        holds: false,
        witness: 0.0,
        violation: first_violation(betas[0]),
        samples: nodes.len(),
        skipped: 0,
    })
}

/// Default cap on sampled points per check.
pub const MAX_SAMPLED_POINTS: usize = 4096;

/// (aInc)_exponent or (aDec)_exponent with the declared constant `L` of
/// `phi`. The report's witness is the smallest `L` that works on the
/// samples.
pub fn check_ainc_adec(
    phi: &PhiFunction,
    domain: &Domain,
    exponent: f64,
    mode: Monotonicity,
    t_grid: &[f64],
) -> Result<ConditionReport> {
    if t_grid.len() < 2 || t_grid.windows(2).any(|w| !(w[1] > w[0])) || !(t_grid[0] > 0.0) {
        return Err(Error::Argument(
            "t grid must be positive and strictly increasing".into(),
        ));
    }
    if t_grid[t_grid.len() - 1] / t_grid[0] < 1e6 * (1.0 - 1e-12) {
        return Err(Error::Argument(
            "t grid must span at least six decades".into(),
        ));
    }
    if mode == Monotonicity::Inc && !(exponent > 1.0) {
        return Err(Error::Argument(format!(
            "(aInc) needs an exponent above 1, got {exponent}"
        )));
    }
    let nodes = subsample(domain.inside_nodes(), MAX_SAMPLED_POINTS);
    let loc = locals(phi, domain, &nodes)?;
    let lattice = domain.lattice();

    // Per point: worst ratio and its (s, t) pair.
    let per_point: Vec<(f64, f64, f64)> = loc
        .par_iter()
        .map(|l| {
            let mut best = (1.0, t_grid[0], t_grid[0]);
            let mut ext_val = f64::NAN;
            let mut ext_t = t_grid[0];
            for &t in t_grid {
                let g = l.value(t) / t.powf(exponent);
                if ext_val.is_nan() {
                    ext_val = g;
                    ext_t = t;
                    continue;
                }
                let ratio = match mode {
                    Monotonicity::Inc => ext_val / g,
                    Monotonicity::Dec => g / ext_val,
                };
                let ratio = if ratio.is_nan() { f64::INFINITY } else { ratio };
                if ratio > best.0 {
                    best = (ratio, ext_t, t);
                }
                let more_extreme = match mode {
                    Monotonicity::Inc => g > ext_val,
                    Monotonicity::Dec => g < ext_val,
                };
                if more_extreme {
                    ext_val = g;
                    ext_t = t;
                }
            }
            best
        })
        .collect();

    let (worst_idx, &(worst, s, t)) = per_point
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .0.total_cmp(&b.1 .0).then(b.0.cmp(&a.0)))
        .expect("domain has inside nodes");
    let l = phi.l_const();
    let holds = worst <= l * (1.0 + 1e-12);
    let condition = match mode {
        Monotonicity::Inc => Condition::AIncP,
        Monotonicity::Dec => Condition::ADecQ,
    };
    Ok(ConditionReport {
        condition,
        holds,
        witness: worst,
        violation: (!holds).then(|| Violation::Pair {
            x: lattice.position(nodes[worst_idx]),
            s,
            t,
            exponent,
            mode,
            l,
        }),
        samples: nodes.len(),
        skipped: 0,
    })
}

/// Balls used by the (A1) checkers: dyadic radii with centres on the global
/// lattice `spacing_factor * r * Z^n`, so lines such as `{x_1 = 0}` are hit.
#[derive(Debug, Clone, PartialEq)]
pub struct BallSampler {
    pub radii: Vec<f64>,
    pub spacing_factor: f64,
    /// Cap on the points sampled per ball for `φ⁺_B` and `φ⁻_B`.
    pub max_points: usize,
    /// Points of the geometric `t` grid per ball.
    pub t_points: usize,
    pub beta_grid: Vec<f64>,
}

impl BallSampler {
    /// Radii `r_max, r_max/2, ..., r_max/2^{levels-1}`.
    pub fn dyadic(r_max: f64, levels: usize) -> Self {
        Self {
            radii: (0..levels).map(|k| r_max * 0.5f64.powi(k as i32)).collect(),
            spacing_factor: 1.0,
            max_points: MAX_SAMPLED_POINTS,
            t_points: 24,
            beta_grid: default_beta_grid(),
        }
    }

    /// Sampled balls meeting the domain, and the number of radii skipped
    /// for being below the grid spacing.
    pub fn balls(&self, domain: &Domain) -> Result<(Vec<Ball>, usize)> {
        if self.radii.is_empty() || self.radii.iter().any(|&r| !(r > 0.0)) {
            return Err(Error::Argument("ball radii must be positive".into()));
        }
        if !(self.spacing_factor > 0.0) {
            return Err(Error::Argument("ball spacing must be positive".into()));
        }
        let h = domain.h();
        let dim = domain.dim();
        let (lo, hi) = domain.bounding_box();
        let mut balls = Vec::new();
        let mut skipped = 0;
        for &r in &self.radii {
            if r < h {
                skipped += 1;
                continue;
            }
            let step = self.spacing_factor * r;
            let range = |a: f64, b: f64| {
                let i0 = ((a - r) / step).floor() as i64;
                let i1 = ((b + r) / step).ceil() as i64;
                i0..=i1
            };
            let ys: Vec<f64> = if dim == 1 {
                vec![0.0]
            } else {
                range(lo[1], hi[1]).map(|j| j as f64 * step).collect()
            };
            for &y in &ys {
                for i in range(lo[0], hi[0]) {
                    let ball = Ball::new([i as f64 * step, y], r);
                    if !ball.inside_nodes(domain).is_empty() {
                        balls.push(ball);
                    }
                }
            }
        }
        Ok((balls, skipped))
    }
}

/// Outcome for one ball: smallest passing index into the β grid's failure
/// list and the violation at the smallest β, if any.
struct BallOutcome {
    /// Largest β (index into the ascending grid) that works on this ball,
    /// or `None` when no β works.
    best: Option<usize>,
    /// Violation at the smallest grid β.
    violation: Option<Violation>,
}

fn ball_outcome(
    ball: &Ball,
    points: &[Point],
    loc: &[LocalPhi<'_>],
    betas: &[f64],
    mode: A1Mode,
    t_points: usize,
    dim: usize,
) -> Result<BallOutcome> {
    let t_max = match mode {
        A1Mode::A1n => 1.0 / ball.diameter(),
        A1Mode::A1 => {
            let inv_measure = 1.0 / ball.measure(dim);
            let phi_minus = |t: f64| loc.iter().map(|l| l.value(t)).fold(f64::INFINITY, f64::min);
            left_inverse_of(phi_minus, inv_measure, 1.0)?
        }
    };
    if !(t_max >= 1.0) {
        return Ok(BallOutcome {
            best: Some(betas.len() - 1),
            violation: None,
        });
    }
    let ts = if t_max > 1.0 {
        geometric_grid(1.0, t_max, t_points.max(2))?
    } else {
        vec![1.0]
    };
    let mut best = Some(betas.len() - 1);
    let mut violation = None;
    for &t in &ts {
        let (inf_idx, inf_val) = loc
            .iter()
            .enumerate()
            .map(|(k, l)| (k, l.value(t)))
            .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
        // Largest β in the current admissible prefix that still works at t.
        let mut limit = match best {
            Some(b) => b as isize,
            None => -1,
        };
        while limit >= 0 {
            let beta = betas[limit as usize];
            let sup_val = loc
                .iter()
                .map(|l| l.value(beta * t))
                .fold(f64::NEG_INFINITY, f64::max);
            if sup_val <= inf_val {
                break;
            }
            limit -= 1;
        }
        best = (limit >= 0).then_some(limit as usize);
        if violation.is_none() {
            let beta = betas[0];
            let (sup_idx, sup_val) = loc
                .iter()
                .enumerate()
                .map(|(k, l)| (k, l.value(beta * t)))
                .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
            if sup_val > inf_val {
                violation = Some(Violation::Ball {
                    center: ball.center,
                    radius: ball.radius,
                    beta,
                    t,
                    x_sup: points[sup_idx],
                    x_inf: points[inf_idx],
                });
            }
        }
    }
    Ok(BallOutcome { best, violation })
}

/// (A1) or (A1-n): a single `β` from the sampler's grid with
/// `φ⁺_B(βt) <= φ⁻_B(t)` for every sampled ball and every sampled `t` in the
/// mode's range. Suprema and infima run over inside nodes in `B`.
pub fn check_a1(
    phi: &PhiFunction,
    domain: &Domain,
    sampler: &BallSampler,
    mode: A1Mode,
) -> Result<ConditionReport> {
    let betas = validate_beta_grid(&sampler.beta_grid)?;
    let (balls, skipped) = sampler.balls(domain)?;
    if balls.is_empty() {
        return Err(Error::Argument(
            "no sampled ball meets the domain above the grid resolution".into(),
        ));
    }
    let lattice = domain.lattice();
    let outcomes: Vec<BallOutcome> = balls
        .par_iter()
        .map(|ball| {
            let nodes = subsample(&ball.inside_nodes(domain), sampler.max_points);
            let points: Vec<Point> = nodes.iter().map(|&k| lattice.position(k)).collect();
            let loc = locals(phi, domain, &nodes)?;
            ball_outcome(
                ball,
                &points,
                &loc,
                &betas,
                mode,
                sampler.t_points,
                domain.dim(),
            )
        })
        .collect::<Result<_>>()?;

    let mut best: Option<usize> = Some(betas.len() - 1);
    for o in &outcomes {
        best = match (best, o.best) {
            (Some(a), Some(b)) => Some(a.min(b)),
            _ => None,
        };
    }
    let condition = match mode {
        A1Mode::A1 => Condition::A1,
        A1Mode::A1n => Condition::A1n,
    };
    let violation = if best.is_none() {
        outcomes.iter().find_map(|o| o.violation.clone())
    } else {
        None
    };
    Ok(ConditionReport {
        condition,
        holds: best.is_some(),
        witness: best.map(|b| betas[b]).unwrap_or(0.0),
        violation,
        samples: balls.len(),
        skipped,
    })
}
