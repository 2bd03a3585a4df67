//! Finite-support random environments.
//!
//! An environment is a finite list of states, each a pair (offspring law,
//! immigration law), drawn i.i.d. every generation with fixed probabilities.
//! The associated random walk has increments `X = log m(F)`.

mod lattice;
pub mod presets;

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::laws::PgfLaw;
use crate::math::{exp, fabs, log, pow};

pub use lattice::{lattice_span, LatticeVerdict};

/// `|E[X e^X]|` below this counts as the intermediate case.
pub const INTERMEDIATE_TOL: f64 = 1e-9;

/// Exponent slack used for the intermediate-case moment check: the walk has
/// finite variance, so the stable index is 2.
pub const A3_EPSILON: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    offspring: PgfLaw,
    immigration: PgfLaw,
    x: f64,
}

impl EnvState {
    pub fn new(offspring: PgfLaw, immigration: PgfLaw) -> Result<Self> {
        offspring.validate()?;
        immigration.validate()?;
        let m = offspring.mean();
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::InvalidEnv(format!("offspring mean {m} must be positive and finite")));
        }
        if !immigration.mean().is_finite() {
            return Err(Error::InvalidEnv("immigration mean must be finite".into()));
        }
        Ok(Self { offspring, immigration, x: log(m) })
    }

    pub fn offspring(&self) -> &PgfLaw {
        &self.offspring
    }

    pub fn immigration(&self) -> &PgfLaw {
        &self.immigration
    }

    /// `log m(F)` for this state's offspring law.
    pub fn x(&self) -> f64 {
        self.x
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvModel {
    states: Vec<EnvState>,
    probs: Vec<f64>,
    cumulative: Vec<f64>,
}

impl EnvModel {
    pub fn new(states: Vec<EnvState>, probs: Vec<f64>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InvalidEnv("at least one state is required".into()));
        }
        if states.len() != probs.len() {
            return Err(Error::InvalidEnv(format!("{} states but {} probabilities", states.len(), probs.len())));
        }
        if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
            return Err(Error::InvalidEnv(format!("state probability {p} must be positive")));
        }
        let total: f64 = probs.iter().sum();
        if fabs(total - 1.0) > 1e-12 {
            return Err(Error::InvalidEnv(format!("state probabilities sum to {total}")));
        }
        if states.len() > 1 && states.iter().all(|s| s.x == states[0].x) {
            return Err(Error::InvalidEnv(
                "several states share one log-mean; use a single state for a constant environment".into(),
            ));
        }
        let probs: Vec<f64> = probs.iter().map(|p| p / total).collect();
        Ok(Self::from_parts(states, probs))
    }

    /// Build from `(offspring, immigration, probability)` triples.
    pub fn from_triples<I>(triples: I) -> Result<Self>
    where
        I: IntoIterator<Item = (PgfLaw, PgfLaw, f64)>,
    {
        let mut states = Vec::new();
        let mut probs = Vec::new();
        for (f, g, p) in triples {
            states.push(EnvState::new(f, g)?);
            probs.push(p);
        }
        Self::new(states, probs)
    }

    fn from_parts(states: Vec<EnvState>, probs: Vec<f64>) -> Self {
        let mut acc = 0.0;
        let cumulative = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Self { states, probs, cumulative }
    }

    pub fn states(&self) -> &[EnvState] {
        &self.states
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn x_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.states.iter().map(EnvState::x)
    }

    pub fn mean_x(&self) -> f64 {
        self.expect(|s| s.x)
    }

    fn expect<F: Fn(&EnvState) -> f64>(&self, f: F) -> f64 {
        self.states.iter().zip(&self.probs).map(|(s, p)| p * f(s)).sum()
    }

    /// `(E[e^{tX}], E[X e^{tX}])`.
    pub fn cumulant(&self, t: f64) -> (f64, f64) {
        let mut g = 0.0;
        let mut dg = 0.0;
        for (s, p) in self.states.iter().zip(&self.probs) {
            let w = p * exp(t * s.x);
            g += w;
            dg += w * s.x;
        }
        (g, dg)
    }

    /// Draw a state index.
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        if self.states.len() == 1 {
            return 0;
        }
        let u = rng.random::<f64>();
        self.cumulative.partition_point(|&c| c <= u).min(self.states.len() - 1)
    }

    /// Reweight state probabilities by `e^{delta x} / E[e^{delta X}]`.
    pub fn tilt(&self, delta: f64) -> EnvModel {
        let weights: Vec<f64> = self.states.iter().zip(&self.probs).map(|(s, p)| p * exp(delta * s.x)).collect();
        let gamma: f64 = weights.iter().sum();
        Self::from_parts(self.states.clone(), weights.iter().map(|w| w / gamma).collect())
    }

    /// Classify the subcritical regime and compute the tilt parameters.
    pub fn classify(&self) -> Result<Regime> {
        let (kind, beta, delta) = self.regime_kind()?;
        let (gamma, _) = self.cumulant(delta);
        let flags = self.report_for(kind, delta, 1)?;
        Ok(Regime { kind, beta, delta, gamma, mean_x: self.mean_x(), flags })
    }

    fn regime_kind(&self) -> Result<(RegimeKind, Option<f64>, f64)> {
        let mean_x = self.mean_x();
        if !(mean_x < 0.0) {
            return Err(Error::NotSubcritical { mean_x });
        }
        let (_, d1) = self.cumulant(1.0);
        if d1 < -INTERMEDIATE_TOL {
            return Ok((RegimeKind::Strongly, None, 1.0));
        }
        if d1 <= INTERMEDIATE_TOL {
            return Ok((RegimeKind::Intermediate, None, 1.0));
        }
        let beta = self.solve_beta()?;
        Ok((RegimeKind::Weakly, Some(beta), beta))
    }

    /// Root of `E[X e^{tX}] = 0` on `(0, 1)`. The function is increasing in
    /// `t`, negative at 0 and positive at 1 here. Newton steps are kept inside
    /// the bisection bracket.
    fn solve_beta(&self) -> Result<f64> {
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        let mut t = 0.5;
        for _ in 0..200 {
            let (_, f) = self.cumulant(t);
            if f == 0.0 {
                lo = t;
                hi = t;
                break;
            }
            if f < 0.0 {
                lo = t;
            } else {
                hi = t;
            }
            let fp: f64 = self.expect(|s| s.x * s.x * exp(t * s.x));
            let newton = t - f / fp;
            let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if fabs(next - t) <= 1e-16 || hi - lo <= 1e-15 {
                t = next;
                break;
            }
            t = next;
        }
        let beta = if hi - lo <= 1e-15 { 0.5 * (lo + hi) } else { t };
        if !(beta > 1e-12 && beta < 1.0 - 1e-12) {
            return Err(Error::OutOfScope(format!("weak-case root beta = {beta} is not inside (0, 1)")));
        }
        Ok(beta)
    }

    /// Hypothesis checks with truncation level `a` for the moment condition.
    pub fn hypothesis_report(&self, a: u64) -> Result<HypothesisReport> {
        let (kind, _, delta) = self.regime_kind()?;
        self.report_for(kind, delta, a)
    }

    fn report_for(&self, kind: RegimeKind, delta: f64, a: u64) -> Result<HypothesisReport> {
        let xs: Vec<f64> = self.x_values().collect();
        let a2 = match lattice_span(&xs) {
            LatticeVerdict::Nonlattice => LatticeCheck { lattice: false, span: None, status: CheckStatus::Pass },
            LatticeVerdict::Lattice(span) => LatticeCheck { lattice: true, span: Some(span), status: CheckStatus::Flag },
            LatticeVerdict::Degenerate => LatticeCheck { lattice: true, span: None, status: CheckStatus::Flag },
        };

        // moment conditions on the offspring laws are taken under the tilted measure
        let tilted = self.tilt(delta);
        let mut log_theta = 0.0;
        let mut log_theta_pow = 0.0;
        for (s, q) in tilted.states.iter().zip(&tilted.probs) {
            let th = s.offspring.theta(a)?;
            let lp = if th > 1.0 { log(th) } else { 0.0 };
            log_theta += q * lp;
            log_theta_pow += q * pow(lp, 2.0 + A3_EPSILON);
        }
        let needed = match kind {
            RegimeKind::Strongly => log_theta,
            RegimeKind::Intermediate => log_theta_pow,
            RegimeKind::Weakly => 0.0,
        };
        let a3 = if needed.is_finite() { CheckStatus::Pass } else { CheckStatus::Fail };

        let mut a4_value = 0.0;
        let mut a4_status = CheckStatus::Pass;
        for (s, p) in self.states.iter().zip(&self.probs) {
            let denom = 1.0 - s.immigration.p0();
            if denom <= 0.0 {
                a4_value = f64::INFINITY;
                a4_status = CheckStatus::Fail;
                break;
            }
            a4_value += p * s.immigration.mean() / denom;
        }
        if !a4_value.is_finite() {
            a4_status = CheckStatus::Fail;
        }

        Ok(HypothesisReport {
            a,
            a2,
            a3_log_theta: log_theta,
            a3_log_theta_pow: log_theta_pow,
            a3,
            a4: MomentCheck { value: a4_value, status: a4_status },
        })
    }

    /// `E[1 - G_0(1 - v)]` with `G_0` an independent draw of the immigration law.
    pub fn g0_complement(&self, v: f64) -> f64 {
        self.expect(|s| s.immigration.eval_complement(v))
    }

    /// `E[(1 - G_0(1 - v)) / (1 - G_0(0))]`. States without immigration
    /// contribute zero.
    pub fn g0_complement_normalized(&self, v: f64) -> f64 {
        self.expect(|s| {
            let denom = 1.0 - s.immigration.p0();
            if denom > 0.0 {
                s.immigration.eval_complement(v) / denom
            } else {
                0.0
            }
        })
    }

    /// `E[G'(1)]`, the mean number of immigrants.
    pub fn immigration_mean(&self) -> f64 {
        self.expect(|s| s.immigration.mean())
    }

    /// `E[G'(1) / (1 - G(0))]`; infinite when some state has no immigration.
    pub fn immigration_mean_normalized(&self) -> f64 {
        self.expect(|s| {
            let denom = 1.0 - s.immigration.p0();
            if denom > 0.0 {
                s.immigration.mean() / denom
            } else {
                f64::INFINITY
            }
        })
    }

    /// Index of the first state with `G(0) = 1`, if any.
    pub fn state_without_immigration(&self) -> Option<usize> {
        self.states.iter().position(|s| s.immigration.p0() >= 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum RegimeKind {
    Strongly,
    Intermediate,
    Weakly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "UPPERCASE"))]
pub enum CheckStatus {
    Pass,
    Fail,
    Flag,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LatticeCheck {
    pub lattice: bool,
    pub span: Option<f64>,
    pub status: CheckStatus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MomentCheck {
    pub value: f64,
    pub status: CheckStatus,
}

/// Outcome of the numeric hypothesis checks.
///
/// `a2` is the lattice test on the log-means, `a3_*` are tilted expectations
/// of `log+ theta(a)` and `(log+ theta(a))^{2+eps}`, `a4` is
/// `E[G'(1) / (1 - G(0))]`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HypothesisReport {
    pub a: u64,
    pub a2: LatticeCheck,
    pub a3_log_theta: f64,
    pub a3_log_theta_pow: f64,
    pub a3: CheckStatus,
    pub a4: MomentCheck,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Regime {
    pub kind: RegimeKind,
    pub beta: Option<f64>,
    pub delta: f64,
    pub gamma: f64,
    pub mean_x: f64,
    pub flags: HypothesisReport,
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn pm1(p_up: f64) -> EnvModel {
        let e = core::f64::consts::E;
        EnvModel::from_triples([
            (PgfLaw::linear_fractional(e, 2.0).unwrap(), PgfLaw::poisson(1.0).unwrap(), p_up),
            (PgfLaw::linear_fractional(1.0 / e, 0.5).unwrap(), PgfLaw::poisson(1.0).unwrap(), 1.0 - p_up),
        ])
        .unwrap()
    }

    #[test]
    fn cumulant_examples() {
        let e = core::f64::consts::E;
        let (g, dg) = pm1(0.3).cumulant(1.0);
        assert!((g - (0.3 * e + 0.7 / e)).abs() < 1e-15);
        assert!((dg - (0.3 * e - 0.7 / e)).abs() < 1e-15);
        assert!((g - 1.073000).abs() < 5e-7 && (dg - 0.557969).abs() < 5e-7);
        let (g, dg) = pm1(0.1).cumulant(1.0);
        assert!((g - 0.602920).abs() < 5e-7 && (dg + 0.059263).abs() < 5e-7);
        let env = pm1(0.3);
        let (g0, d0) = env.cumulant(0.0);
        assert_eq!(g0, 1.0);
        assert!((d0 - env.mean_x()).abs() < 1e-15);
    }

    #[test]
    fn weak_two_point_closed_form() {
        let r = pm1(0.3).classify().unwrap();
        assert_eq!(r.kind, RegimeKind::Weakly);
        let beta = 0.5 * (7.0f64 / 3.0).ln();
        assert!((r.beta.unwrap() - beta).abs() < 1e-12);
        assert_eq!(r.delta, r.beta.unwrap());
        assert!((r.gamma - 2.0 * 0.21f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn intermediate_two_point() {
        let e = core::f64::consts::E;
        let r = pm1(1.0 / (1.0 + e * e)).classify().unwrap();
        assert_eq!(r.kind, RegimeKind::Intermediate);
        assert_eq!(r.delta, 1.0);
        assert!((r.gamma - 1.0 / 1.0f64.cosh()).abs() < 1e-12);
    }

    #[test]
    fn strongly_two_point() {
        let env = presets::e_strong2();
        let r = env.classify().unwrap();
        assert_eq!(r.kind, RegimeKind::Strongly);
        assert!((r.gamma - 0.66).abs() < 1e-12);
        assert!((env.cumulant(1.0).1 + 0.070375).abs() < 1e-6);
    }

    #[test]
    fn supercritical_is_rejected() {
        let env = pm1(0.6);
        assert!(matches!(env.classify(), Err(Error::NotSubcritical { .. })));
    }

    #[test]
    fn tilt_examples() {
        let env = pm1(0.3);
        let r = env.classify().unwrap();
        let t = env.tilt(r.delta);
        assert!((t.probs()[0] - 0.5).abs() < 1e-12);
        assert!(t.mean_x().abs() < 1e-12);
        let e = core::f64::consts::E;
        let t = pm1(1.0 / (1.0 + e * e)).tilt(1.0);
        assert!((t.probs()[0] - 0.5).abs() < 1e-12);
        let d1 = presets::d1();
        assert_eq!(d1.tilt(0.7), d1);
    }

    #[test]
    fn hypothesis_report_examples() {
        let rep = pm1(0.3).hypothesis_report(1).unwrap();
        assert!(rep.a2.lattice);
        assert_eq!(rep.a2.status, CheckStatus::Flag);
        assert!((rep.a2.span.unwrap() - 1.0).abs() < 1e-12);
        assert!((rep.a4.value - 1.0 / (1.0 - (-1.0f64).exp())).abs() < 1e-12);
        assert!((rep.a4.value - 1.581977).abs() < 1e-6);
        assert_eq!(rep.a4.status, CheckStatus::Pass);

        let rep = presets::e_weak2().hypothesis_report(1).unwrap();
        assert!(!rep.a2.lattice);
        assert_eq!(rep.a2.status, CheckStatus::Pass);

        let no_imm = EnvModel::from_triples([(
            PgfLaw::linear_fractional(0.5, 0.5).unwrap(),
            PgfLaw::table(vec![1.0]).unwrap(),
            1.0,
        )])
        .unwrap();
        let rep = no_imm.hypothesis_report(1).unwrap();
        assert_eq!(rep.a4.status, CheckStatus::Fail);
        assert_eq!(no_imm.state_without_immigration(), Some(0));
    }

    #[test]
    fn a3_values_are_tilted_expectations() {
        let env = presets::e_strong2();
        let rep = env.hypothesis_report(1).unwrap();
        let t = env.tilt(1.0);
        let want: f64 = t
            .states()
            .iter()
            .zip(t.probs())
            .map(|(s, q)| q * s.offspring().theta(1).unwrap().ln().max(0.0))
            .sum();
        assert!((rep.a3_log_theta - want).abs() < 1e-14);
        assert_eq!(rep.a3, CheckStatus::Pass);
    }

    #[test]
    fn env_validation() {
        let f = PgfLaw::linear_fractional(0.5, 0.5).unwrap();
        let g = PgfLaw::poisson(1.0).unwrap();
        assert!(EnvModel::from_triples([(f.clone(), g.clone(), 0.5)]).is_err());
        assert!(EnvModel::from_triples([(f.clone(), g.clone(), 0.5), (f.clone(), g.clone(), 0.5)]).is_err());
        assert!(EnvModel::new(vec![], vec![]).is_err());
        assert!(EnvModel::from_triples([(f, g, 1.0)]).is_ok());
    }
}
