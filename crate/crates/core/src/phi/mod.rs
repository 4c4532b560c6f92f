//! Generalized Φ-functions `φ(x, t)` and checks of their structural
//! conditions.
//!
//! A [`PhiFunction`] bundles an evaluator with the constants it claims to
//! satisfy: the lower growth exponent `p` of (aInc)_p, the upper exponent `q`
//! of (aDec)_q and the almost-monotonicity constant `L`. The library never
//! infers these constants; the checkers in [`conditions`] verify them on
//! explicit sample grids.

pub mod conditions;

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{to_point, Lattice, Point, ScalarField};

pub use conditions::{
    check_a0, check_a1, check_ainc_adec, default_beta_grid, geometric_grid, A1Mode, BallSampler,
    Condition, ConditionReport, Monotonicity, Violation,
};

/// Spatially varying coefficient: an exponent `p(x)` or a weight `a(x)`.
#[derive(Clone)]
pub enum Coefficient {
    Constant(f64),
    /// Lattice samples, interpolated multilinearly; evaluation outside the
    /// lattice box is a domain error.
    Sampled(Arc<ScalarField>),
    /// Closed-form coefficient defined on all of `R^n`.
    Function(Arc<dyn Fn(&Point) -> f64 + Send + Sync>),
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Constant(c) => write!(f, "Constant({c})"),
            Coefficient::Sampled(s) => write!(f, "Sampled({:?})", s.lattice()),
            Coefficient::Function(_) => write!(f, "Function(..)"),
        }
    }
}

impl Coefficient {
    pub fn sampled(field: ScalarField) -> Self {
        Coefficient::Sampled(Arc::new(field))
    }

    pub fn from_fn(f: impl Fn(&Point) -> f64 + Send + Sync + 'static) -> Self {
        Coefficient::Function(Arc::new(f))
    }

    pub fn at(&self, x: &Point) -> Result<f64> {
        let v = match self {
            Coefficient::Constant(c) => *c,
            Coefficient::Sampled(s) => s.interpolate(x)?,
            Coefficient::Function(f) => f(x),
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Domain(format!("coefficient is not finite at {x:?}")))
        }
    }

    /// Value at node `idx` of `lattice`; exact lookup when the coefficient
    /// is sampled on the same lattice.
    fn at_node(&self, lattice: &Lattice, idx: usize) -> Result<f64> {
        if let Coefficient::Sampled(s) = self {
            if s.lattice() == lattice {
                return Ok(s.get(idx));
            }
        }
        self.at(&lattice.position(idx))
    }

    fn range(&self) -> Option<(f64, f64)> {
        match self {
            Coefficient::Constant(c) => Some((*c, *c)),
            Coefficient::Sampled(s) => {
                let v = s.values();
                Some(
                    v.iter()
                        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
                            (lo.min(x), hi.max(x))
                        }),
                )
            }
            Coefficient::Function(_) => None,
        }
    }
}

/// Φ-function given by log-log linear interpolation of samples of
/// `t -> φ(t)`, extended by the end slopes.
#[derive(Debug, Clone, PartialEq)]
pub struct OrliczTable {
    log_t: Vec<f64>,
    log_phi: Vec<f64>,
    slopes: Vec<f64>,
}

impl OrliczTable {
    pub fn new(samples: &[(f64, f64)]) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::Argument(
                "an Orlicz table needs at least two samples".into(),
            ));
        }
        for w in samples.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::Argument(
                    "sample abscissae must increase strictly".into(),
                ));
            }
            if w[1].1 < w[0].1 {
                return Err(Error::Argument("sampled φ must be nondecreasing".into()));
            }
        }
        if samples
            .iter()
            .any(|&(t, v)| !(t > 0.0 && v > 0.0 && t.is_finite() && v.is_finite()))
        {
            return Err(Error::Argument(
                "samples must be positive and finite".into(),
            ));
        }
        let log_t: Vec<f64> = samples.iter().map(|s| s.0.ln()).collect();
        let log_phi: Vec<f64> = samples.iter().map(|s| s.1.ln()).collect();
        let slopes: Vec<f64> = (0..samples.len() - 1)
            .map(|k| (log_phi[k + 1] - log_phi[k]) / (log_t[k + 1] - log_t[k]))
            .collect();
        if slopes[0] <= 0.0 {
            return Err(Error::Argument(
                "the first sample segment must increase so that φ(0+) = 0".into(),
            ));
        }
        Ok(Self {
            log_t,
            log_phi,
            slopes,
        })
    }

    /// Samples `f` at `count` geometrically spaced points of `[t_min, t_max]`.
    pub fn from_fn(f: impl Fn(f64) -> f64, t_min: f64, t_max: f64, count: usize) -> Result<Self> {
        let grid = geometric_grid(t_min, t_max, count)?;
        let samples: Vec<(f64, f64)> = grid.into_iter().map(|t| (t, f(t))).collect();
        Self::new(&samples)
    }

    /// Segment index and its slope for `ln t`.
    fn segment(&self, y: f64) -> (usize, f64) {
        let n = self.slopes.len();
        let k = self.log_t.partition_point(|&v| v <= y);
        let seg = k.saturating_sub(1).min(n - 1);
        (seg, self.slopes[seg])
    }

    fn value(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let y = t.ln();
        let (k, s) = self.segment(y);
        (self.log_phi[k] + s * (y - self.log_t[k])).exp()
    }

    fn derivatives(&self, t: f64) -> (f64, f64) {
        if t <= 0.0 {
            return (0.0, 0.0);
        }
        let y = t.ln();
        let (k, s) = self.segment(y);
        let v = (self.log_phi[k] + s * (y - self.log_t[k])).exp();
        (v * s / t, v * s * (s - 1.0) / (t * t))
    }
}

pub type CustomFn = Arc<dyn Fn(&Point, f64) -> f64 + Send + Sync>;

/// Family of a [`PhiFunction`].
#[derive(Clone)]
pub enum Family {
    /// `t^p`.
    Power { p: f64 },
    /// x-independent, tabulated.
    Orlicz(Arc<OrliczTable>),
    /// `t^{p(x)}`.
    VariableExponent { exponent: Coefficient },
    /// `t^p + a(x) t^q` with `a >= 0`.
    DoublePhase { p: f64, q: f64, weight: Coefficient },
    /// User evaluator; derivatives are taken by finite differences.
    Custom(CustomFn),
}

impl fmt::Debug for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Power { p } => write!(f, "Power({p})"),
            Family::Orlicz(t) => write!(f, "Orlicz({} samples)", t.log_t.len()),
            Family::VariableExponent { exponent } => write!(f, "VariableExponent({exponent:?})"),
            Family::DoublePhase { p, q, weight } => write!(f, "DoublePhase({p}, {q}, {weight:?})"),
            Family::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// An evaluable generalized Orlicz integrand with its declared structure
/// constants. Cloning is cheap; all evaluations are pure.
#[derive(Debug, Clone)]
pub struct PhiFunction {
    family: Family,
    p_lower: f64,
    q_upper: f64,
    l_const: f64,
    strictly_convex: bool,
}

impl PhiFunction {
    fn validated(
        family: Family,
        p_lower: f64,
        q_upper: f64,
        l_const: f64,
        strictly_convex: bool,
    ) -> Result<Self> {
        if !(p_lower > 1.0 && p_lower.is_finite()) {
            return Err(Error::Argument(format!(
                "p_lower must exceed 1, got {p_lower}"
            )));
        }
        if !(q_upper >= p_lower && q_upper.is_finite()) {
            return Err(Error::Argument(format!(
                "q_upper must be finite and at least p_lower, got {q_upper}"
            )));
        }
        if !(l_const >= 1.0 && l_const.is_finite()) {
            return Err(Error::Argument(format!(
                "L must be at least 1, got {l_const}"
            )));
        }
        Ok(Self {
            family,
            p_lower,
            q_upper,
            l_const,
            strictly_convex,
        })
    }

    /// `t^p`, with `p = q = p` and `L = 1`.
    pub fn power(p: f64) -> Result<Self> {
        Self::validated(Family::Power { p }, p, p, 1.0, true)
    }

    /// `t^p + a(x) t^q`.
    pub fn double_phase(p: f64, q: f64, weight: Coefficient) -> Result<Self> {
        if let Some((lo, _)) = weight.range() {
            if lo < 0.0 {
                return Err(Error::Argument(
                    "double phase weight must be nonnegative".into(),
                ));
            }
        }
        Self::validated(Family::DoublePhase { p, q, weight }, p, q, 1.0, true)
    }

    /// `t^{p(x)}` with `p(x)` in `[p_lower, q_upper]`.
    pub fn variable_exponent(exponent: Coefficient, p_lower: f64, q_upper: f64) -> Result<Self> {
        if let Some((lo, hi)) = exponent.range() {
            if lo < p_lower - 1e-12 || hi > q_upper + 1e-12 {
                return Err(Error::Argument(format!(
                    "exponent range [{lo}, {hi}] leaves [{p_lower}, {q_upper}]"
                )));
            }
        }
        Self::validated(
            Family::VariableExponent { exponent },
            p_lower,
            q_upper,
            1.0,
            true,
        )
    }

    pub fn orlicz(
        table: OrliczTable,
        p_lower: f64,
        q_upper: f64,
        l_const: f64,
        strictly_convex: bool,
    ) -> Result<Self> {
        Self::validated(
            Family::Orlicz(Arc::new(table)),
            p_lower,
            q_upper,
            l_const,
            strictly_convex,
        )
    }

    /// User-supplied evaluator with self-declared constants.
    pub fn custom(
        f: impl Fn(&Point, f64) -> f64 + Send + Sync + 'static,
        p_lower: f64,
        q_upper: f64,
        l_const: f64,
        strictly_convex: bool,
    ) -> Result<Self> {
        Self::validated(
            Family::Custom(Arc::new(f)),
            p_lower,
            q_upper,
            l_const,
            strictly_convex,
        )
    }

    /// `φ(x, t)^r` as a new Φ-function with exponents scaled by `r`. The
    /// lower exponent may drop to 1 or below, so this bypasses the `p > 1`
    /// validation.
    pub fn powered(&self, r: f64) -> PhiFunction {
        let base = self.clone();
        PhiFunction {
            family: Family::Custom(Arc::new(move |x: &Point, t: f64| {
                base.local(x)
                    .map(|l| l.value(t).powf(r))
                    .unwrap_or(f64::NAN)
            })),
            p_lower: self.p_lower * r,
            q_upper: self.q_upper * r,
            l_const: self.l_const.powf(r),
            strictly_convex: false,
        }
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn p_lower(&self) -> f64 {
        self.p_lower
    }

    pub fn q_upper(&self) -> f64 {
        self.q_upper
    }

    /// Almost-monotonicity constant `L`.
    pub fn l_const(&self) -> f64 {
        self.l_const
    }

    pub fn is_strictly_convex(&self) -> bool {
        self.strictly_convex
    }

    /// Overrides the declared `L`.
    pub fn with_l_const(mut self, l: f64) -> Result<Self> {
        if !(l >= 1.0 && l.is_finite()) {
            return Err(Error::Argument(format!("L must be at least 1, got {l}")));
        }
        self.l_const = l;
        Ok(self)
    }

    pub fn with_strict_convexity(mut self, strictly_convex: bool) -> Self {
        self.strictly_convex = strictly_convex;
        self
    }

    /// Doubling constant `L 2^q` implied by (aDec)_q with constant `L`.
    pub fn doubling_constant(&self) -> f64 {
        self.l_const * 2f64.powf(self.q_upper)
    }

    /// True when `φ` does not depend on `x`.
    pub fn is_x_independent(&self) -> bool {
        match &self.family {
            Family::Power { .. } | Family::Orlicz(_) => true,
            Family::VariableExponent { exponent } => matches!(exponent, Coefficient::Constant(_)),
            Family::DoublePhase { weight, .. } => matches!(weight, Coefficient::Constant(_)),
            Family::Custom(_) => false,
        }
    }

    /// True for `t^2`, the only family with a quadratic energy.
    pub fn is_quadratic(&self) -> bool {
        match &self.family {
            Family::Power { p } => *p == 2.0,
            Family::VariableExponent {
                exponent: Coefficient::Constant(p),
            } => *p == 2.0,
            _ => false,
        }
    }

    /// `φ` frozen at the point `x`.
    pub fn local(&self, x: &Point) -> Result<LocalPhi<'_>> {
        Ok(match &self.family {
            Family::Power { p } => LocalPhi::Power { p: *p },
            Family::Orlicz(t) => LocalPhi::Orlicz(t),
            Family::VariableExponent { exponent } => {
                let p = exponent.at(x)?;
                self.check_exponent(p, x)?;
                LocalPhi::Power { p }
            }
            Family::DoublePhase { p, q, weight } => {
                let a = weight.at(x)?;
                self.check_weight(a, x)?;
                LocalPhi::DoublePhase { p: *p, q: *q, a }
            }
            Family::Custom(f) => LocalPhi::Custom { f, x: *x },
        })
    }

    /// `φ` frozen at node `idx` of `lattice`.
    pub fn local_at_node(&self, lattice: &Lattice, idx: usize) -> Result<LocalPhi<'_>> {
        match &self.family {
            Family::VariableExponent { exponent } => {
                let p = exponent.at_node(lattice, idx)?;
                self.check_exponent(p, &lattice.position(idx))?;
                Ok(LocalPhi::Power { p })
            }
            Family::DoublePhase { p, q, weight } => {
                let a = weight.at_node(lattice, idx)?;
                self.check_weight(a, &lattice.position(idx))?;
                Ok(LocalPhi::DoublePhase { p: *p, q: *q, a })
            }
            _ => self.local(&lattice.position(idx)),
        }
    }

    fn check_exponent(&self, p: f64, x: &Point) -> Result<()> {
        if p < self.p_lower - 1e-12 || p > self.q_upper + 1e-12 {
            return Err(Error::Domain(format!(
                "exponent p(x) = {p} at {x:?} leaves [{}, {}]",
                self.p_lower, self.q_upper
            )));
        }
        Ok(())
    }

    fn check_weight(&self, a: f64, x: &Point) -> Result<()> {
        if a < 0.0 {
            return Err(Error::Domain(format!(
                "negative weight a(x) = {a} at {x:?}"
            )));
        }
        Ok(())
    }
}

/// `φ(x, ·)` at a fixed point `x`.
#[derive(Clone)]
pub enum LocalPhi<'a> {
    Power { p: f64 },
    DoublePhase { p: f64, q: f64, a: f64 },
    Orlicz(&'a OrliczTable),
    Custom { f: &'a CustomFn, x: Point },
}

impl fmt::Debug for LocalPhi<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LocalPhi::Power { p } => write!(f, "Power({p})"),
            LocalPhi::DoublePhase { p, q, a } => write!(f, "DoublePhase({p}, {q}, a = {a})"),
            LocalPhi::Orlicz(_) => write!(f, "Orlicz"),
            LocalPhi::Custom { x, .. } => write!(f, "Custom(at {x:?})"),
        }
    }
}

impl LocalPhi<'_> {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            LocalPhi::Power { p } => t.powf(*p),
            LocalPhi::DoublePhase { p, q, a } => t.powf(*p) + a * t.powf(*q),
            LocalPhi::Orlicz(tab) => tab.value(t),
            LocalPhi::Custom { f, x } => {
                if t <= 0.0 {
                    0.0
                } else {
                    f(x, t)
                }
            }
        }
    }

    /// First and second derivative in `t`, for `t > 0`.
    pub fn derivatives(&self, t: f64) -> (f64, f64) {
        match self {
            LocalPhi::Power { p } => {
                let tp2 = t.powf(p - 2.0);
                (p * tp2 * t, p * (p - 1.0) * tp2)
            }
            LocalPhi::DoublePhase { p, q, a } => {
                let tp2 = t.powf(p - 2.0);
                let tq2 = if *a > 0.0 { t.powf(q - 2.0) } else { 0.0 };
                (
                    p * tp2 * t + a * q * tq2 * t,
                    p * (p - 1.0) * tp2 + a * q * (q - 1.0) * tq2,
                )
            }
            LocalPhi::Orlicz(tab) => tab.derivatives(t),
            LocalPhi::Custom { .. } => {
                let eta1 = 1e-6 * t.max(1e-300);
                let d1 = (self.value(t + eta1) - self.value(t - eta1)) / (2.0 * eta1);
                let eta2 = 1e-4 * t.max(1e-300);
                let d2 = (self.value(t + eta2) - 2.0 * self.value(t) + self.value(t - eta2))
                    / (eta2 * eta2);
                (d1, d2.max(0.0))
            }
        }
    }
}

/// `φ(x, t)`.
pub fn evaluate(phi: &PhiFunction, x: &[f64], t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("φ is defined for t >= 0, got {t}")));
    }
    let x = to_point(x)?;
    let v = phi.local(&x)?.value(t);
    if v.is_nan() {
        return Err(Error::Domain(format!(
            "φ evaluates to NaN at x = {x:?}, t = {t}"
        )));
    }
    Ok(v)
}

/// Relative tolerance of [`left_inverse`].
pub const LEFT_INVERSE_TOL: f64 = 1e-13;

/// Left inverse `inf { t >= 0 : f(t) >= tau }` of a nondecreasing `f` by
/// bracketed bisection. `guess` seeds the bracket.
pub fn left_inverse_of(f: impl Fn(f64) -> f64, tau: f64, guess: f64) -> Result<f64> {
    if !(tau >= 0.0) {
        return Err(Error::Domain(format!(
            "left inverse needs tau >= 0, got {tau}"
        )));
    }
    if tau == 0.0 {
        return Ok(0.0);
    }
    let mut hi = if guess.is_finite() && guess > 0.0 {
        guess
    } else {
        1.0
    };
    while !(f(hi) >= tau) {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::NotInvertible {
                level: tau,
                bound: f(f64::MAX),
            });
        }
    }
    let mut lo = hi;
    let mut halvings = 0;
    while lo > 0.0 && f(lo) >= tau {
        lo *= 0.5;
        halvings += 1;
        if halvings > 2100 {
            lo = 0.0;
        }
    }
    for _ in 0..400 {
        if hi - lo <= LEFT_INVERSE_TOL * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) >= tau {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// `φ^{-1}(x, τ) = inf { t >= 0 : φ(x, t) >= τ }`.
///
/// The bisection bracket starts from the bounds implied by the declared
/// (aInc)_p and (aDec)_q exponents around `t = 1` and is widened if those
/// declarations turn out to be wrong.
pub fn left_inverse(phi: &PhiFunction, x: &[f64], tau: f64) -> Result<f64> {
    let x = to_point(x)?;
    let local = phi.local(&x)?;
    if !(tau >= 0.0) {
        return Err(Error::Domain(format!(
            "left inverse needs tau >= 0, got {tau}"
        )));
    }
    if tau == 0.0 {
        return Ok(0.0);
    }
    let phi1 = local.value(1.0);
    let guess = if phi1 > 0.0 && phi1.is_finite() {
        let ratio = phi.l_const() * tau / phi1;
        if ratio >= 1.0 {
            ratio.powf(1.0 / phi.p_lower())
        } else {
            ratio.powf(1.0 / phi.q_upper())
        }
    } else {
        1.0
    };
    left_inverse_of(|t| local.value(t), tau, guess)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn x1_weight() -> Coefficient {
        Coefficient::from_fn(|x| x[0])
    }

    #[test]
    fn power_and_double_phase_values() {
        let p2 = PhiFunction::power(2.0).unwrap();
        assert_eq!(evaluate(&p2, &[0.0, 0.0], 3.0).unwrap(), 9.0);
        let dp = PhiFunction::double_phase(2.0, 3.0, x1_weight()).unwrap();
        assert_abs_diff_eq!(
            evaluate(&dp, &[0.5, 0.0], 2.0).unwrap(),
            8.0,
            epsilon = 1e-14
        );
        assert_eq!(evaluate(&dp, &[0.5, 0.0], 0.0).unwrap(), 0.0);
    }

    #[test]
    fn orlicz_table_matches_closed_form() {
        let f = |t: f64| t * (1.0 + t).ln();
        let table = OrliczTable::from_fn(f, 1e-6, 1e6, 10_001).unwrap();
        let phi = PhiFunction::orlicz(table, 1.01, 2.0, 1.0, true).unwrap();
        assert_abs_diff_eq!(
            evaluate(&phi, &[0.0], 1.0).unwrap(),
            2f64.ln(),
            epsilon = 1e-6
        );
        for &t in &[1e-3, 0.37, 2.5, 40.0, 1234.5] {
            let v = evaluate(&phi, &[0.0], t).unwrap();
            assert!((v - f(t)).abs() <= 1e-6 * f(t).max(1.0), "t = {t}");
        }
    }

    #[test]
    fn negative_t_is_a_domain_error() {
        let p2 = PhiFunction::power(2.0).unwrap();
        assert!(matches!(evaluate(&p2, &[0.0], -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn sampled_coefficients_have_bounded_support() {
        let l = Lattice::covering(2, &[0.0, 0.0], &[1.0, 1.0], 0.25).unwrap();
        let a = ScalarField::from_fn(&l, |x| x[0].max(0.0)).unwrap();
        let dp = PhiFunction::double_phase(2.0, 3.0, Coefficient::sampled(a)).unwrap();
        assert_abs_diff_eq!(
            evaluate(&dp, &[0.5, 0.0], 2.0).unwrap(),
            8.0,
            epsilon = 1e-12
        );
        assert!(matches!(
            evaluate(&dp, &[3.0, 0.0], 2.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn variable_exponent_range_is_enforced() {
        let l = Lattice::covering(1, &[0.0], &[1.0], 0.25).unwrap();
        let p = ScalarField::from_fn(&l, |x| 2.0 + x[0]).unwrap();
        assert!(PhiFunction::variable_exponent(Coefficient::sampled(p.clone()), 1.5, 2.5).is_err());
        let phi = PhiFunction::variable_exponent(Coefficient::sampled(p), 1.5, 3.5).unwrap();
        assert_abs_diff_eq!(
            evaluate(&phi, &[0.5], 2.0).unwrap(),
            2f64.powf(2.5),
            epsilon = 1e-12
        );
    }

    #[test]
    fn left_inverse_examples() {
        let p2 = PhiFunction::power(2.0).unwrap();
        assert_abs_diff_eq!(
            left_inverse(&p2, &[0.0], 9.0).unwrap(),
            3.0,
            epsilon = 1e-12
        );
        assert_eq!(left_inverse(&p2, &[0.0], 0.0).unwrap(), 0.0);

        // Independent root of t^2 + t^3 = 8 by Newton's method.
        let mut t: f64 = 2.0;
        for _ in 0..50 {
            t -= (t * t + t * t * t - 8.0) / (2.0 * t + 3.0 * t * t);
        }
        let dp = PhiFunction::double_phase(2.0, 3.0, Coefficient::Constant(1.0)).unwrap();
        let inv = left_inverse(&dp, &[0.0, 0.0], 8.0).unwrap();
        assert_abs_diff_eq!(inv, t, epsilon = 1e-8);
        assert_abs_diff_eq!(inv, 1.716_188_659, epsilon = 1e-8);
    }

    #[test]
    fn left_inverse_is_the_infimum() {
        let dp = PhiFunction::double_phase(1.5, 2.5, Coefficient::Constant(0.3)).unwrap();
        let local = dp.local(&[0.0, 0.0]).unwrap();
        for &tau in &[1e-6, 0.1, 1.0, 7.0, 1e5] {
            let t = left_inverse(&dp, &[0.0, 0.0], tau).unwrap();
            assert!(local.value(t) >= tau);
            assert!(local.value(t * (1.0 - 1e-10)) < tau);
        }
    }

    #[test]
    fn bounded_phi_is_not_invertible() {
        let bounded =
            PhiFunction::custom(|_, t| t * t / (1.0 + t * t), 1.5, 2.0, 1.0, false).unwrap();
        assert!(matches!(
            left_inverse(&bounded, &[0.0], 2.0),
            Err(Error::NotInvertible { .. })
        ));
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        let dp = PhiFunction::double_phase(1.5, 2.7, Coefficient::Constant(0.4)).unwrap();
        let l = dp.local(&[0.0, 0.0]).unwrap();
        let t = 0.8;
        let (d1, d2) = l.derivatives(t);
        let e = 1e-5;
        assert_abs_diff_eq!(
            d1,
            (l.value(t + e) - l.value(t - e)) / (2.0 * e),
            epsilon = 1e-7
        );
        assert_abs_diff_eq!(
            d2,
            (l.value(t + e) - 2.0 * l.value(t) + l.value(t - e)) / (e * e),
            epsilon = 1e-4
        );
    }
}
