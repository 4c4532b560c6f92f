use super::{gradient_norms, integrate_phi};
use crate::error::{Error, Result};
use crate::grid::{luxemburg_norm_on, Ball, Point, ScalarField};
use crate::solver::{Hypotheses, Obstacle, ObstacleProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CaccioppoliVariant {
    /// Level-set form on `A(k, r)` for `k >= sup ψ`.
    InteriorK,
    /// Mean-oscillation form on `B` and `2B ⊂ Ω`.
    InteriorMean,
    /// Form on balls whose double meets the complement of `Ω`.
    Boundary,
}

impl CaccioppoliVariant {
    pub fn name(&self) -> &'static str {
        match self {
            CaccioppoliVariant::InteriorK => "interior-k",
            CaccioppoliVariant::InteriorMean => "interior-mean",
            CaccioppoliVariant::Boundary => "boundary",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaccioppoliPair {
    pub lhs: f64,
    pub rhs: f64,
}

impl CaccioppoliPair {
    /// `lhs / rhs`, 0 when both vanish and `∞` when only `rhs` does.
    pub fn ratio(&self) -> f64 {
        if self.lhs == 0.0 {
            0.0
        } else {
            self.lhs / self.rhs
        }
    }
}

fn check_solution(problem: &ObstacleProblem, u: &ScalarField) -> Result<()> {
    if u.lattice() != problem.domain().lattice() {
        return Err(Error::Argument(
            "solution lives on a different lattice".into(),
        ));
    }
    Ok(())
}

fn cells_in(problem: &ObstacleProblem, center: &Point, radius: f64) -> Vec<usize> {
    Ball::new(*center, radius).quadrature_cells(problem.domain())
}

/// `∫_{B_r} φ(x, |∇(u-k)₊|)` against `∫_{A(k,R)} φ(x, (u-k)/(R-r))`.
pub fn caccioppoli_interior_k(
    problem: &ObstacleProblem,
    u: &ScalarField,
    center: &Point,
    big_r: f64,
    r: f64,
    k: f64,
) -> Result<CaccioppoliPair> {
    check_solution(problem, u)?;
    if !(r > 0.0 && r < big_r) {
        return Err(Error::Argument(format!(
            "need 0 < r < R, got r = {r}, R = {big_r}"
        )));
    }
    let domain = problem.domain();
    let outer = Ball::new(*center, big_r);
    if !outer.is_within(domain) {
        return Err(Error::Argument("B(x, R) must lie in the domain".into()));
    }
    if let Obstacle::Field(psi) = problem.obstacle() {
        let sup = outer
            .inside_nodes(domain)
            .iter()
            .map(|&n| psi.get(n))
            .fold(f64::NEG_INFINITY, f64::max);
        if k < sup {
            return Err(Error::Argument(format!(
                "level k = {k} is below sup ψ = {sup} on B(x, R)"
            )));
        }
    }
    let l = domain.lattice();
    let phi = problem.phi();
    let w = u.map(|v| (v - k).max(0.0))?;
    let gw = gradient_norms(&w);
    let lhs = integrate_phi(l, phi, &cells_in(problem, center, r), 1.0, |c| gw[c])?;
    let level: Vec<usize> = cells_in(problem, center, big_r)
        .into_iter()
        .filter(|&c| u.get(c) > k)
        .collect();
    let rhs = integrate_phi(l, phi, &level, 1.0, |c| (u.get(c) - k) / (big_r - r))?;
    Ok(CaccioppoliPair { lhs, rhs })
}

/// `⨍_B φ(x, |∇u|)` against
/// `⨍_{2B} φ(x, |u - u_{2B}| / diam 2B) + ⨍_{2B} φ(x, |∇ψ|) + 1`.
pub fn caccioppoli_interior_mean(
    problem: &ObstacleProblem,
    u: &ScalarField,
    ball: &Ball,
) -> Result<CaccioppoliPair> {
    check_solution(problem, u)?;
    let domain = problem.domain();
    let double = ball.scaled(2.0);
    if !double.is_within(domain) {
        return Err(Error::Argument("2B must lie in the domain".into()));
    }
    let l = domain.lattice();
    let phi = problem.phi();
    let inner = ball.quadrature_cells(domain);
    let outer = double.quadrature_cells(domain);
    if inner.is_empty() {
        return Err(Error::Geometry("ball contains no quadrature cell".into()));
    }
    let vol = l.cell_volume();
    let gu = gradient_norms(u);
    let lhs = integrate_phi(l, phi, &inner, 1.0, |c| gu[c])? / (inner.len() as f64 * vol);
    let m2 = outer.len() as f64 * vol;
    let mean = outer.iter().map(|&c| u.get(c)).sum::<f64>() / outer.len() as f64;
    let osc = integrate_phi(l, phi, &outer, 1.0, |c| {
        (u.get(c) - mean).abs() / double.diameter()
    })? / m2;
    let obstacle_term = match problem.obstacle() {
        Obstacle::None => 0.0,
        Obstacle::Field(psi) => {
            let gp = ScalarField::new(l.clone(), gradient_norms(psi))?;
            let norm = luxemburg_norm_on(domain, &outer, phi, &gp)?.value;
            if norm >= 1.0 {
                return Err(Error::Argument(format!(
                    "‖∇ψ‖ on 2B is {norm}, the estimate needs it below 1"
                )));
            }
            integrate_phi(l, phi, &outer, 1.0, |c| gp.get(c))? / m2
        }
    };
    Ok(CaccioppoliPair {
        lhs,
        rhs: osc + obstacle_term + 1.0,
    })
}

/// `(1/|B|) ∫_{B∩Ω} φ(x, |∇u|)` against
/// `(1/|2B|) ∫_{2B∩Ω} φ(x, |u - f|/diam 2B) + (1/|2B|) ∫_{2B∩Ω} φ(x, |∇f|)`
/// with continuum ball measures.
///
/// With `hypotheses` verifying (A0) and (A1), `f` is replaced by `max(f, ψ)`.
/// Otherwise the radius must stay below `r₀/4`, where `r₀` is the distance
/// from `{f < ψ}` to the complement of `Ω`.
pub fn caccioppoli_boundary(
    problem: &ObstacleProblem,
    u: &ScalarField,
    ball: &Ball,
    hypotheses: Option<&Hypotheses>,
) -> Result<CaccioppoliPair> {
    check_solution(problem, u)?;
    let domain = problem.domain();
    let double = ball.scaled(2.0);
    if double.is_within(domain) {
        return Err(Error::Argument(
            "2B lies inside the domain; use an interior estimate".into(),
        ));
    }
    let l = domain.lattice();
    let f = problem.boundary();
    let lifted = hypotheses.is_some_and(|h| h.a0 && h.a1);
    let datum = match (problem.obstacle(), lifted) {
        (Obstacle::Field(psi), true) => ScalarField::new(
            l.clone(),
            f.values()
                .iter()
                .zip(psi.values())
                .map(|(a, b)| a.max(*b))
                .collect(),
        )?,
        (Obstacle::Field(psi), false) => {
            let r0 = domain
                .inside_nodes()
                .iter()
                .filter(|&&k| f.get(k) < psi.get(k))
                .map(|&k| {
                    let p = l.position(k);
                    domain
                        .halo()
                        .iter()
                        .map(|&b| {
                            let q = l.position(b);
                            (p[0] - q[0]).hypot(p[1] - q[1])
                        })
                        .fold(f64::INFINITY, f64::min)
                })
                .fold(f64::INFINITY, f64::min);
            if !(ball.radius < r0 / 4.0) {
                return Err(Error::Argument(format!(
                    "radius {} is not below r₀/4 = {}",
                    ball.radius,
                    r0 / 4.0
                )));
            }
            f.clone()
        }
        (Obstacle::None, _) => f.clone(),
    };
    let phi = problem.phi();
    let dim = domain.dim();
    let gu = gradient_norms(u);
    let gf = gradient_norms(&datum);
    let inner = ball.quadrature_cells(domain);
    let outer = double.quadrature_cells(domain);
    let lhs = integrate_phi(l, phi, &inner, 1.0, |c| gu[c])? / ball.measure(dim);
    let m2 = double.measure(dim);
    let diff = integrate_phi(l, phi, &outer, 1.0, |c| {
        (u.get(c) - datum.get(c)).abs() / double.diameter()
    })?;
    let grad = integrate_phi(l, phi, &outer, 1.0, |c| gf[c])?;
    Ok(CaccioppoliPair {
        lhs,
        rhs: (diff + grad) / m2,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BallRecord {
    pub center: Point,
    pub radius: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaccioppoliReport {
    pub variant: CaccioppoliVariant,
    pub balls: Vec<BallRecord>,
    /// Largest finite ratio.
    pub fitted_c: f64,
    /// Per radius, the largest ratio; ascending by radius.
    pub per_radius: Vec<(f64, f64)>,
    /// Max over min of the per-radius constants; 1 for a single radius.
    pub spread: f64,
}

impl CaccioppoliReport {
    pub fn from_records(variant: CaccioppoliVariant, balls: Vec<BallRecord>) -> Self {
        let mut radii: Vec<f64> = balls.iter().map(|b| b.radius).collect();
        radii.sort_by(f64::total_cmp);
        radii.dedup();
        let per_radius: Vec<(f64, f64)> = radii
            .iter()
            .map(|&r| {
                let c = balls
                    .iter()
                    .filter(|b| b.radius == r && b.ratio.is_finite())
                    .map(|b| b.ratio)
                    .fold(0.0, f64::max);
                (r, c)
            })
            .collect();
        let fitted_c = per_radius.iter().map(|p| p.1).fold(0.0, f64::max);
        let positive: Vec<f64> = per_radius
            .iter()
            .map(|p| p.1)
            .filter(|&c| c > 0.0)
            .collect();
        let spread = if positive.is_empty() {
            1.0
        } else {
            positive.iter().copied().fold(0.0, f64::max)
                / positive.iter().copied().fold(f64::INFINITY, f64::min)
        };
        Self {
            variant,
            balls,
            fitted_c,
            per_radius,
            spread,
        }
    }

    /// True when every ball satisfies `lhs <= C rhs` with the fitted `C`.
    pub fn holds(&self) -> bool {
        self.fitted_c.is_finite()
            && self
                .balls
                .iter()
                .all(|b| b.lhs <= self.fitted_c * b.rhs * (1.0 + 1e-12))
    }

    /// CSV with columns `variant,center_x,center_y,radius,lhs,rhs,ratio`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "variant", "center_x", "center_y", "radius", "lhs", "rhs", "ratio",
        ])?;
        for b in &self.balls {
            w.write_record([
                self.variant.name().to_string(),
                b.center[0].to_string(),
                b.center[1].to_string(),
                b.radius.to_string(),
                b.lhs.to_string(),
                b.rhs.to_string(),
                b.ratio.to_string(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn summary(&self) -> String {
        let mut out = format!(
            "caccioppoli {}: {} balls, fitted C = {:.6e}, spread across radii = {:.3}\n",
            self.variant.name(),
            self.balls.len(),
            self.fitted_c,
            self.spread
        );
        for (r, c) in &self.per_radius {
            out.push_str(&format!("  r = {r:.6e}: C = {c:.6e}\n"));
        }
        out
    }
}

/// Evaluates one variant on every `(center, radius)` pair. For the level-set
/// form the outer radius is `radius`, the inner `radius/2`, and
/// `k = max(sup_{B_R} ψ, mean of u over B_R)`.
pub fn caccioppoli_sweep(
    variant: CaccioppoliVariant,
    problem: &ObstacleProblem,
    u: &ScalarField,
    balls: &[Ball],
    hypotheses: Option<&Hypotheses>,
) -> Result<CaccioppoliReport> {
    let records = balls
        .iter()
        .map(|b| {
            let pair = match variant {
                CaccioppoliVariant::InteriorK => {
                    let nodes = b.inside_nodes(problem.domain());
                    let sup_psi = nodes
                        .iter()
                        .map(|&n| problem.obstacle().at(n))
                        .fold(f64::NEG_INFINITY, f64::max);
                    let mean =
                        nodes.iter().map(|&n| u.get(n)).sum::<f64>() / nodes.len().max(1) as f64;
                    caccioppoli_interior_k(
                        problem,
                        u,
                        &b.center,
                        b.radius,
                        0.5 * b.radius,
                        sup_psi.max(mean),
                    )?
                }
                CaccioppoliVariant::InteriorMean => caccioppoli_interior_mean(problem, u, b)?,
                CaccioppoliVariant::Boundary => caccioppoli_boundary(problem, u, b, hypotheses)?,
            };
            Ok(BallRecord {
                center: b.center,
                radius: b.radius,
                lhs: pair.lhs,
                rhs: pair.rhs,
                ratio: pair.ratio(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CaccioppoliReport::from_records(variant, records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Domain, Shape};
    use crate::phi::PhiFunction;
    use crate::solver::{solve, SolveOptions};

    fn linear_problem() -> (ObstacleProblem, ScalarField) {
        let d = Domain::from_shape(
            &Shape::Rectangle {
                min: [0.0, 0.0],
                max: [1.0, 1.0],
            },
            1.0 / 32.0,
        )
        .unwrap();
        let f = ScalarField::from_fn(d.lattice(), |x| x[0] + 0.5 * x[1]).unwrap();
        let p = ObstacleProblem::dirichlet(d, PhiFunction::power(2.0).unwrap(), f.clone()).unwrap();
        (p, f)
    }

    #[test]
    fn empty_level_set_gives_zero_sides() {
        let (p, u) = linear_problem();
        let pair = caccioppoli_interior_k(&p, &u, &[0.5, 0.5], 0.25, 0.125, 10.0).unwrap();
        assert_eq!(pair, CaccioppoliPair { lhs: 0.0, rhs: 0.0 });
        assert_eq!(pair.ratio(), 0.0);
    }

    #[test]
    fn level_below_obstacle_is_rejected() {
        let d = Domain::from_shape(&Shape::Interval { a: 0.0, b: 1.0 }, 1.0 / 64.0).unwrap();
        let psi = ScalarField::from_fn(d.lattice(), |x| 0.5 - 4.0 * (x[0] - 0.5).powi(2)).unwrap();
        let p = ObstacleProblem::new(
            d.clone(),
            PhiFunction::power(2.0).unwrap(),
            Obstacle::Field(psi),
            ScalarField::zeros(d.lattice()),
        )
        .unwrap();
        let s = solve(&p, &SolveOptions::default()).unwrap();
        assert!(caccioppoli_interior_k(&p, &s.u, &[0.5, 0.0], 0.25, 0.125, 0.0).is_err());
        let pair = caccioppoli_interior_k(&p, &s.u, &[0.5, 0.0], 0.25, 0.125, 0.5).unwrap();
        assert!(pair.lhs <= 50.0 * pair.rhs);
    }

    #[test]
    fn mean_form_on_linear_minimizer() {
        let (p, u) = linear_problem();
        let pair = caccioppoli_interior_mean(&p, &u, &Ball::new([0.5, 0.5], 0.125)).unwrap();
        assert!((pair.lhs - 1.25).abs() < 1e-12);
        assert!(pair.rhs >= 1.0);
        // Without an obstacle the middle term vanishes.
        let osc_only = pair.rhs - 1.0;
        assert!(osc_only > 0.0 && osc_only < 0.1);
    }

    #[test]
    fn boundary_form_variants() {
        let (p, u) = linear_problem();
        let inner = Ball::new([0.5, 0.5], 0.1);
        assert!(caccioppoli_boundary(&p, &u, &inner, None).is_err());
        let edge = Ball::new([0.5, 0.0], 0.125);
        let pair = caccioppoli_boundary(&p, &u, &edge, None).unwrap();
        // u = f: only the gradient term of f remains.
        let expected_grad = pair.rhs;
        assert!(expected_grad > 0.0);
        let outside = Ball::new([3.0, 3.0], 0.1);
        let pair = caccioppoli_boundary(&p, &u, &outside, None).unwrap();
        assert_eq!(pair.lhs, 0.0);
        assert_eq!(pair.ratio(), 0.0);
    }

    #[test]
    fn report_fits_and_exports() {
        let (p, u) = linear_problem();
        let balls: Vec<Ball> = [0.05, 0.1, 0.2]
            .iter()
            .map(|&r| Ball::new([0.5, 0.5], r))
            .collect();
        let rep =
            caccioppoli_sweep(CaccioppoliVariant::InteriorMean, &p, &u, &balls, None).unwrap();
        assert!(rep.holds());
        assert_eq!(rep.per_radius.len(), 3);
        assert!(rep.spread >= 1.0);
        assert_eq!(rep.to_csv().unwrap().lines().count(), 4);
    }
}
