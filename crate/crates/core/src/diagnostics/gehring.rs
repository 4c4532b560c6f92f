use super::{gradient_norms, integrate_phi};
use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::solver::{Obstacle, ObstacleProblem};

/// Largest accepted growth of `∫φ(x,|∇u|)^{1+ε}` per refinement.
pub const GEHRING_GROWTH: f64 = 1.2;

#[derive(Debug, Clone, PartialEq)]
pub struct GehringLevel {
    pub h: f64,
    /// `∫_Ω φ(x,|∇u|)^{1+ε}` per grid value.
    pub integrals: Vec<f64>,
    /// `(⨍_Ω φ(x,|∇u|)^{1+ε})^{1/(1+ε)}` per grid value; nondecreasing in ε.
    pub normalized_means: Vec<f64>,
    pub energy: f64,
    /// `∫_Ω φ(x,|∇ψ|)^{1+ε}` per grid value; 0 without an obstacle.
    pub obstacle_terms: Vec<f64>,
    /// `∫_Ω φ(x,|∇f|)^{1+ε}` per grid value.
    pub datum_terms: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GehringReport {
    pub epsilon_grid: Vec<f64>,
    /// Coarsest first.
    pub levels: Vec<GehringLevel>,
    /// Per grid value, the largest growth ratio between consecutive levels.
    pub growth: Vec<f64>,
    /// Largest ε of the stable prefix of the grid; `None` when the first
    /// grid value already grows too fast.
    pub epsilon_star: Option<f64>,
    /// Finest-level `∫φ^{1+ε*}`.
    pub lhs: f64,
    /// Finest-level `(∫φ)^{1+ε*}`, `∫φ(|∇ψ|)^{1+ε*}` and `∫φ(|∇f|)^{1+ε*}`.
    pub energy_term: f64,
    pub obstacle_term: f64,
    pub datum_term: f64,
    /// `lhs / (energy_term + obstacle_term + datum_term + 1)`.
    pub fitted_c: Option<f64>,
}

impl GehringReport {
    /// True when every level's normalized means are nondecreasing in ε.
    pub fn means_monotone(&self) -> bool {
        self.levels.iter().all(|l| {
            l.normalized_means
                .windows(2)
                .all(|w| w[1] >= w[0] * (1.0 - 1e-12))
        })
    }

    /// CSV with columns `h,epsilon,integral,normalized_mean`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["h", "epsilon", "integral", "normalized_mean"])?;
        for l in &self.levels {
            for (i, e) in self.epsilon_grid.iter().enumerate() {
                w.write_record([
                    l.h.to_string(),
                    e.to_string(),
                    l.integrals[i].to_string(),
                    l.normalized_means[i].to_string(),
                ])?;
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn summary(&self) -> String {
        let mut out = format!("gehring: {} levels\n", self.levels.len());
        for (e, g) in self.epsilon_grid.iter().zip(&self.growth) {
            out.push_str(&format!("  eps = {e}: worst growth {g:.4}\n"));
        }
        match (self.epsilon_star, self.fitted_c) {
            (Some(e), Some(c)) => out.push_str(&format!("  eps* = {e}, fitted C = {c:.6e}\n")),
            _ => out.push_str("  no stable eps\n"),
        }
        out
    }
}

fn level(problem: &ObstacleProblem, u: &ScalarField, grid: &[f64]) -> Result<GehringLevel> {
    let domain = problem.domain();
    if u.lattice() != domain.lattice() {
        return Err(Error::Argument(
            "solution lives on a different lattice".into(),
        ));
    }
    let l = domain.lattice();
    let phi = problem.phi();
    let cells = domain.quadrature_cells();
    let measure = domain.measure();
    let gu = gradient_norms(u);
    let gf = gradient_norms(problem.boundary());
    let gp = match problem.obstacle() {
        Obstacle::None => None,
        Obstacle::Field(psi) => Some(gradient_norms(psi)),
    };
    let mut integrals = Vec::with_capacity(grid.len());
    let mut normalized_means = Vec::with_capacity(grid.len());
    let mut obstacle_terms = Vec::with_capacity(grid.len());
    let mut datum_terms = Vec::with_capacity(grid.len());
    for &e in grid {
        let i = integrate_phi(l, phi, cells, 1.0 + e, |c| gu[c])?;
        integrals.push(i);
        normalized_means.push((i / measure).powf(1.0 / (1.0 + e)));
        obstacle_terms.push(match &gp {
            None => 0.0,
            Some(g) => integrate_phi(l, phi, cells, 1.0 + e, |c| g[c])?,
        });
        datum_terms.push(integrate_phi(l, phi, cells, 1.0 + e, |c| gf[c])?);
    }
    Ok(GehringLevel {
        h: domain.h(),
        integrals,
        normalized_means,
        energy: integrate_phi(l, phi, cells, 1.0, |c| gu[c])?,
        obstacle_terms,
        datum_terms,
    })
}

/// Estimates the higher-integrability exponent from solutions of the same
/// problem on successively refined grids.
///
/// `ε*` is the largest grid value such that it and every smaller grid value
/// grow by at most [`GEHRING_GROWTH`] between consecutive levels. The
/// constant is fitted on the finest level.
pub fn gehring_estimate(
    levels: &[(&ObstacleProblem, &ScalarField)],
    epsilon_grid: &[f64],
) -> Result<GehringReport> {
    if levels.len() < 2 {
        return Err(Error::Argument(format!(
            "need at least 2 refinement levels, got {}",
            levels.len()
        )));
    }
    if epsilon_grid.is_empty() || epsilon_grid.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(Error::Argument(
            "ε grid must be nonempty, positive and finite".into(),
        ));
    }
    if epsilon_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Argument("ε grid must be strictly increasing".into()));
    }
    let mut ordered: Vec<&(&ObstacleProblem, &ScalarField)> = levels.iter().collect();
    ordered.sort_by(|a, b| b.0.domain().h().total_cmp(&a.0.domain().h()));
    if ordered
        .windows(2)
        .any(|w| w[1].0.domain().h() >= w[0].0.domain().h())
    {
        return Err(Error::Argument(
            "refinement levels must have distinct spacings".into(),
        ));
    }
    let computed = ordered
        .iter()
        .map(|(p, u)| level(p, u, epsilon_grid))
        .collect::<Result<Vec<_>>>()?;
    let growth: Vec<f64> = (0..epsilon_grid.len())
        .map(|i| {
            computed
                .windows(2)
                .map(|w| w[1].integrals[i] / w[0].integrals[i])
                .fold(0.0, f64::max)
        })
        .collect();
    let stable = growth.iter().take_while(|&&g| g <= GEHRING_GROWTH).count();
    let epsilon_star = stable.checked_sub(1).map(|i| epsilon_grid[i]);
    let finest = computed.last().expect("at least two levels");
    let (lhs, energy_term, obstacle_term, datum_term, fitted_c) = match stable.checked_sub(1) {
        None => (f64::NAN, f64::NAN, f64::NAN, f64::NAN, None),
        Some(i) => {
            let e = epsilon_grid[i];
            let lhs = finest.integrals[i];
            let et = finest.energy.powf(1.0 + e);
            let ot = finest.obstacle_terms[i];
            let dt = finest.datum_terms[i];
            (lhs, et, ot, dt, Some(lhs / (et + ot + dt + 1.0)))
        }
    };
    Ok(GehringReport {
        epsilon_grid: epsilon_grid.to_vec(),
        levels: computed,
        growth,
        epsilon_star,
        lhs,
        energy_term,
        obstacle_term,
        datum_term,
        fitted_c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Domain, Shape};
    use crate::phi::PhiFunction;
    use crate::solver::{solve, SolveOptions};

    fn smooth(h: f64) -> (ObstacleProblem, ScalarField) {
        let d = Domain::from_shape(
            &Shape::Rectangle {
                min: [0.0, 0.0],
                max: [1.0, 1.0],
            },
            h,
        )
        .unwrap();
        let f = ScalarField::from_fn(d.lattice(), |x| x[0] * x[0] - x[1] * x[1]).unwrap();
        let p = ObstacleProblem::dirichlet(d, PhiFunction::power(2.0).unwrap(), f).unwrap();
        let u = solve(&p, &SolveOptions::default()).unwrap().u;
        (p, u)
    }

    #[test]
    fn smooth_data_is_stable_on_the_whole_grid() {
        let levels: Vec<_> = [1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0]
            .iter()
            .map(|&h| smooth(h))
            .collect();
        let refs: Vec<_> = levels.iter().map(|(p, u)| (p, u)).collect();
        let grid = [0.25, 0.5, 1.0, 2.0, 4.0];
        let r = gehring_estimate(&refs, &grid).unwrap();
        assert_eq!(r.epsilon_star, Some(4.0));
        assert!(r.means_monotone());
        let c = r.fitted_c.unwrap();
        assert!(c > 0.0 && c.is_finite());
        assert_eq!(r.to_csv().unwrap().lines().count(), 1 + 3 * grid.len());
    }

    #[test]
    fn rejects_bad_input() {
        let a = smooth(1.0 / 8.0);
        assert!(gehring_estimate(&[(&a.0, &a.1)], &[1.0]).is_err());
        assert!(gehring_estimate(&[(&a.0, &a.1), (&a.0, &a.1)], &[1.0]).is_err());
        let b = smooth(1.0 / 16.0);
        assert!(gehring_estimate(&[(&a.0, &a.1), (&b.0, &b.1)], &[1.0, 0.5]).is_err());
        assert!(gehring_estimate(&[(&a.0, &a.1), (&b.0, &b.1)], &[]).is_err());
    }
}
