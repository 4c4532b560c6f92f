use crate::error::{Error, Result};
use crate::grid::{Ball, Point, ScalarField};
use crate::solver::ObstacleProblem;

/// Relative growth tolerated between consecutive radii in the decay test.
pub const DECAY_SLACK: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// Decay failed at a point not known to be fat; the continuity result
    /// has no converse, so nothing follows.
    NonConclusive,
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::NonConclusive => "non-conclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryContinuityReport {
    pub x0: Point,
    /// Descending.
    pub radii: Vec<f64>,
    /// `osc(u, B(x₀,r) ∩ Ω)` per radius.
    pub oscillations: Vec<f64>,
    /// `sup_{B(x₀,r) ∩ Ω} |u - f(x₀)|` per radius.
    pub deviations: Vec<f64>,
    /// `tol · osc(f)` over the closed domain.
    pub threshold: f64,
    pub monotone: bool,
    pub verdict: Verdict,
}

impl BoundaryContinuityReport {
    /// CSV with columns `radius,oscillation,deviation`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["radius", "oscillation", "deviation"])?;
        for i in 0..self.radii.len() {
            w.write_record([
                self.radii[i].to_string(),
                self.oscillations[i].to_string(),
                self.deviations[i].to_string(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn summary(&self) -> String {
        let mut out = format!(
            "boundary continuity at ({}, {}): {} (threshold {:.3e}, monotone {})\n",
            self.x0[0],
            self.x0[1],
            self.verdict.name(),
            self.threshold,
            self.monotone
        );
        for i in 0..self.radii.len() {
            out.push_str(&format!(
                "  r = {:.6e}: osc {:.6e}, sup|u - f(x0)| {:.6e}\n",
                self.radii[i], self.oscillations[i], self.deviations[i]
            ));
        }
        out
    }
}

/// Tracks `sup |u - f(x₀)|` over shrinking balls at a boundary point.
///
/// Passes when the deviations decrease up to [`DECAY_SLACK`] and end at or
/// below `tol · osc(f)`. Otherwise the verdict is `Fail` at a fat point and
/// `NonConclusive` elsewhere.
pub fn boundary_continuity_check(
    problem: &ObstacleProblem,
    u: &ScalarField,
    f: impl Fn(&Point) -> f64,
    x0: &Point,
    radii: &[f64],
    x0_is_fat: bool,
    tol: f64,
) -> Result<BoundaryContinuityReport> {
    let domain = problem.domain();
    let l = domain.lattice();
    if u.lattice() != l {
        return Err(Error::Argument(
            "solution lives on a different lattice".into(),
        ));
    }
    if domain.nearest_halo(x0, 2.0 * domain.h()).is_none() {
        return Err(Error::Argument(format!(
            "({}, {}) is not on the boundary of the domain",
            x0[0], x0[1]
        )));
    }
    if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(Error::Argument(
            "radii must be nonempty, positive and finite".into(),
        ));
    }
    if !(tol >= 0.0) {
        return Err(Error::Argument(format!(
            "tolerance must be nonnegative, got {tol}"
        )));
    }
    let mut radii = radii.to_vec();
    radii.sort_by(|a, b| b.total_cmp(a));
    let f0 = f(x0);
    let mut oscillations = Vec::with_capacity(radii.len());
    let mut deviations = Vec::with_capacity(radii.len());
    for &r in &radii {
        let nodes = Ball::new(*x0, r).inside_nodes(domain);
        if nodes.is_empty() {
            return Err(Error::Argument(format!(
                "B(x₀, {r}) contains no inside node"
            )));
        }
        let (lo, hi) = nodes
            .iter()
            .map(|&k| u.get(k))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
                (a.min(v), b.max(v))
            });
        oscillations.push(hi - lo);
        deviations.push(
            nodes
                .iter()
                .map(|&k| (u.get(k) - f0).abs())
                .fold(0.0, f64::max),
        );
    }
    let (flo, fhi) = domain
        .inside_nodes()
        .iter()
        .chain(domain.halo())
        .map(|&k| f(&l.position(k)))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            (a.min(v), b.max(v))
        });
    let threshold = tol * (fhi - flo);
    let monotone = deviations
        .windows(2)
        .all(|w| w[1] <= (1.0 + DECAY_SLACK) * w[0]);
    let reached = *deviations.last().expect("nonempty radii") <= threshold;
    let verdict = if monotone && reached {
        Verdict::Pass
    } else if x0_is_fat {
        Verdict::Fail
    } else {
        Verdict::NonConclusive
    };
    Ok(BoundaryContinuityReport {
        x0: *x0,
        radii,
        oscillations,
        deviations,
        threshold,
        monotone,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Domain, Shape};
    use crate::phi::PhiFunction;

    fn linear() -> (ObstacleProblem, ScalarField) {
        let d = Domain::from_shape(
            &Shape::Rectangle {
                min: [0.0, 0.0],
                max: [1.0, 1.0],
            },
            1.0 / 64.0,
        )
        .unwrap();
        let f = ScalarField::from_fn(d.lattice(), |x| x[0] + 2.0 * x[1]).unwrap();
        (
            ObstacleProblem::dirichlet(d, PhiFunction::power(2.0).unwrap(), f.clone()).unwrap(),
            f,
        )
    }

    #[test]
    fn linear_datum_decays_linearly() {
        let (p, u) = linear();
        let radii = [0.5, 0.25, 0.125, 0.0625];
        let r = boundary_continuity_check(
            &p,
            &u,
            |x| x[0] + 2.0 * x[1],
            &[0.5, 0.0],
            &radii,
            true,
            0.1,
        )
        .unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        for (rad, dev) in r.radii.iter().zip(&r.deviations) {
            assert!(*dev <= 5.0_f64.sqrt() * rad + 1e-12);
        }
        assert!(r.oscillations.iter().all(|o| *o >= 0.0));
        assert_eq!(r.to_csv().unwrap().lines().count(), 5);
    }

    #[test]
    fn verdict_depends_on_fatness_when_decay_is_missing() {
        let (p, u) = linear();
        let radii = [0.5, 0.25];
        let fat = boundary_continuity_check(
            &p,
            &u,
            |x| x[0] + 2.0 * x[1],
            &[0.5, 0.0],
            &radii,
            true,
            1e-6,
        )
        .unwrap();
        assert_eq!(fat.verdict, Verdict::Fail);
        let thin = boundary_continuity_check(
            &p,
            &u,
            |x| x[0] + 2.0 * x[1],
            &[0.5, 0.0],
            &radii,
            false,
            1e-6,
        )
        .unwrap();
        assert_eq!(thin.verdict, Verdict::NonConclusive);
    }

    #[test]
    fn interior_point_is_rejected() {
        let (p, u) = linear();
        assert!(
            boundary_continuity_check(&p, &u, |_| 0.0, &[0.5, 0.5], &[0.1], true, 1e-3).is_err()
        );
    }
}
