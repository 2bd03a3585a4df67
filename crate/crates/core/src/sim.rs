//! Trajectory simulation of the stopped process and of the associated walk.
//!
//! A life period starts from `W_0 >= 1` drawn from the immigration law of an
//! independent state conditioned to be positive. Each generation draws a
//! state, lets the `W_{n-1}` individuals reproduce into `T_n`, and stops at
//! the first `n` with `T_n = 0`; otherwise immigrants join, `W_n = T_n + eta_n`.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use crate::env::EnvModel;
use crate::error::{Error, Result};
use crate::laws::LawSampler;
use crate::math::{exp, sqrt};
use crate::rng::McPlan;
use crate::stats::{pairwise_reduce, Estimate, MeanVar};
use crate::tail::{Provenance, SurvivalCurve, SurvivalPoint};

pub const DEFAULT_CAP: u64 = 10_000;

/// Populations above this are treated as overflow.
const POPULATION_LIMIT: u64 = 1 << 62;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LifePeriodSample {
    /// First `n >= 1` with `W_n = 0`, or the cap when censored.
    pub zeta: u64,
    pub censored: bool,
    /// Largest `W_n` seen, `W_0` included.
    pub peak: u64,
}

/// Per-state samplers for one environment.
#[derive(Debug, Clone)]
pub struct Simulator {
    env: EnvModel,
    offspring: Vec<LawSampler>,
    immigration: Vec<LawSampler>,
    cap: u64,
}

impl Simulator {
    pub fn new(env: &EnvModel, cap: u64) -> Result<Self> {
        if cap == 0 {
            return Err(Error::Domain("trajectory cap must be at least 1".into()));
        }
        if let Some(state) = env.state_without_immigration() {
            return Err(Error::NoImmigration { state });
        }
        Ok(Self {
            env: env.clone(),
            offspring: env.states().iter().map(|s| s.offspring().sampler()).collect(),
            immigration: env.states().iter().map(|s| s.immigration().sampler()).collect(),
            cap,
        })
    }

    pub fn cap(&self) -> u64 {
        self.cap
    }

    /// `W_0`: a state for `G_0`, then its immigration law conditioned on
    /// being positive.
    fn initial<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let i = self.env.sample_index(rng);
        loop {
            let w = self.immigration[i].sample(rng);
            if w > 0 {
                return w;
            }
        }
    }

    pub fn life_period<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<LifePeriodSample> {
        let mut w = self.initial(rng);
        let mut peak = w;
        for n in 1..=self.cap {
            let i = self.env.sample_index(rng);
            let t = self.offspring[i].sample_sum(w, rng);
            if t == 0 {
                return Ok(LifePeriodSample { zeta: n, censored: false, peak });
            }
            w = t
                .checked_add(self.immigration[i].sample(rng))
                .filter(|&x| x < POPULATION_LIMIT)
                .ok_or(Error::Overflow { generation: n })?;
            peak = peak.max(w);
        }
        Ok(LifePeriodSample { zeta: self.cap, censored: true, peak })
    }
}

pub fn simulate_life_period<R: Rng + ?Sized>(env: &EnvModel, rng: &mut R, cap: u64) -> Result<LifePeriodSample> {
    Simulator::new(env, cap)?.life_period(rng)
}

/// `samples` life periods, split over the plan's streams and returned in
/// stream order.
pub fn simulate_batch(env: &EnvModel, samples: u64, cap: u64, plan: &McPlan) -> Result<Vec<LifePeriodSample>> {
    let sim = Simulator::new(env, cap)?;
    let blocks = plan.map_blocks(samples, |stream, count| {
        let mut rng = plan.rng(stream);
        (0..count).map(|_| sim.life_period(&mut rng)).collect::<Result<Vec<_>>>()
    });
    let mut out = Vec::with_capacity(samples as usize);
    for b in blocks {
        out.extend(b?);
    }
    Ok(out)
}

/// `R^_n = #{zeta > n} / count` for `n = 1..=n_max`, with half-width
/// `3 sqrt(R^ (1 - R^) / count)`. Censored samples count as `zeta > n`.
pub fn empirical_survival(samples: &[LifePeriodSample], n_max: usize) -> Result<SurvivalCurve> {
    if samples.is_empty() {
        return Err(Error::TooFewSamples { min: 1, got: 0 });
    }
    if let Some(s) = samples.iter().find(|s| s.censored && s.zeta <= n_max as u64) {
        return Err(Error::Domain(format!("horizon {n_max} reaches the trajectory cap {}", s.zeta)));
    }
    // survivors[n] = #{zeta > n}
    let mut ends = alloc::vec![0u64; n_max + 2];
    for s in samples {
        let z = (s.zeta as usize).min(n_max + 1);
        ends[z] += 1;
    }
    let count = samples.len() as f64;
    let mut alive = samples.len() as u64 - ends[0];
    let points = (1..=n_max)
        .map(|n| {
            alive -= ends[n];
            let p = alive as f64 / count;
            SurvivalPoint { n, value: p, half_width: 3.0 * sqrt(p * (1.0 - p) / count), provenance: Provenance::Empirical }
        })
        .collect();
    Ok(SurvivalCurve { points })
}

/// Fraction of censored samples.
pub fn censored_fraction(samples: &[LifePeriodSample]) -> f64 {
    samples.iter().filter(|s| s.censored).count() as f64 / samples.len().max(1) as f64
}

/// One path `S_0 = 0, ..., S_n` with `L_n = min_{0<=i<=n} S_i`,
/// `M_n = max_{1<=i<=n} S_i` and `tau` the first index attaining `L_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkSample {
    pub path: Vec<f64>,
    pub l: f64,
    pub m: f64,
    pub tau: usize,
}

fn walk_law(env: &EnvModel, tilted: bool) -> Result<EnvModel> {
    if tilted {
        Ok(env.tilt(env.classify()?.delta))
    } else {
        Ok(env.clone())
    }
}

pub fn sample_walk<R: Rng + ?Sized>(env: &EnvModel, rng: &mut R, n: usize, tilted: bool) -> Result<WalkSample> {
    if n == 0 {
        return Err(Error::Domain("walk length must be at least 1".into()));
    }
    let law = walk_law(env, tilted)?;
    let mut path = Vec::with_capacity(n + 1);
    path.push(0.0);
    let (mut l, mut m, mut tau) = (0.0, f64::NEG_INFINITY, 0);
    let mut s = 0.0;
    for i in 1..=n {
        s += law.states()[law.sample_index(rng)].x();
        path.push(s);
        if s < l {
            l = s;
            tau = i;
        }
        m = m.max(s);
    }
    Ok(WalkSample { path, l, m, tau })
}

/// Monte Carlo summary of the walk at time `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WalkSummary {
    pub n: usize,
    pub theta: f64,
    pub tilted: bool,
    pub samples: u64,
    pub l: Estimate,
    pub m: Estimate,
    pub tau: Estimate,
    pub s: Estimate,
    /// `P(M_n < 0)`.
    pub max_negative: Estimate,
    /// `E[e^{theta S_n}; M_n < 0]`.
    pub exp_max_negative: Estimate,
    /// `E[e^{-theta S_n}; L_n >= 0]`.
    pub exp_min_nonnegative: Estimate,
}

pub fn walk_stats(env: &EnvModel, n: usize, samples: u64, theta: f64, tilted: bool, plan: &McPlan) -> Result<WalkSummary> {
    if n == 0 {
        return Err(Error::Domain("walk length must be at least 1".into()));
    }
    let law = walk_law(env, tilted)?;
    let blocks = plan.map_blocks(samples, |stream, count| {
        let mut rng = plan.rng(stream);
        let mut acc = [MeanVar::new(); 7];
        for _ in 0..count {
            let (mut s, mut l, mut m, mut tau) = (0.0, 0.0, f64::NEG_INFINITY, 0usize);
            for i in 1..=n {
                s += law.states()[law.sample_index(&mut rng)].x();
                if s < l {
                    l = s;
                    tau = i;
                }
                m = m.max(s);
            }
            let vals = [
                l,
                m,
                tau as f64,
                s,
                f64::from(u8::from(m < 0.0)),
                if m < 0.0 { exp(theta * s) } else { 0.0 },
                if l >= 0.0 { exp(-theta * s) } else { 0.0 },
            ];
            for (a, v) in acc.iter_mut().zip(vals) {
                a.push(v);
            }
        }
        acc
    });
    let merged = pairwise_reduce(&blocks, &|a: &[MeanVar; 7], b: &[MeanVar; 7]| core::array::from_fn(|j| a[j].merge(&b[j])))
        .expect("at least one stream");
    let e = |j: usize| merged[j].estimate();
    Ok(WalkSummary {
        n,
        theta,
        tilted,
        samples,
        l: e(0),
        m: e(1),
        tau: e(2),
        s: e(3),
        max_negative: e(4),
        exp_max_negative: e(5),
        exp_min_nonnegative: e(6),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::presets;
    use crate::laws::PgfLaw;
    use alloc::vec;

    fn sample(zeta: u64) -> LifePeriodSample {
        LifePeriodSample { zeta, censored: false, peak: 1 }
    }

    #[test]
    fn counting_example() {
        let s: Vec<_> = [1, 1, 2, 3, 1, 5, 2, 1, 1, 4].iter().map(|&z| sample(z)).collect();
        let c = empirical_survival(&s, 2).unwrap();
        assert_eq!(c.value(1), Some(0.5));
        assert_eq!(c.value(2), Some(0.3));
        let ones = vec![sample(1); 20];
        let c = empirical_survival(&ones, 5).unwrap();
        assert!(c.points.iter().all(|p| p.value == 0.0));
    }

    #[test]
    fn censoring_and_cap() {
        let s = vec![sample(1), LifePeriodSample { zeta: 5, censored: true, peak: 3 }];
        assert!(empirical_survival(&s, 5).is_err());
        let c = empirical_survival(&s, 4).unwrap();
        assert_eq!(c.value(4), Some(0.5));
        assert!(empirical_survival(&[], 1).is_err());
    }

    #[test]
    fn zeta_at_least_one_and_reproducible() {
        let env = presets::e_weak();
        let plan = McPlan::new(7, 8);
        let a = simulate_batch(&env, 2000, DEFAULT_CAP, &plan).unwrap();
        let b = simulate_batch(&env, 2000, DEFAULT_CAP, &plan).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|s| s.zeta >= 1 && s.peak >= 1));
    }

    #[test]
    fn no_immigration_is_rejected() {
        let env = EnvModel::from_triples([(
            PgfLaw::linear_fractional(0.5, 0.5).unwrap(),
            PgfLaw::table(vec![1.0]).unwrap(),
            1.0,
        )])
        .unwrap();
        let mut rng = McPlan::default().rng(0);
        assert!(matches!(simulate_life_period(&env, &mut rng, 10), Err(Error::NoImmigration { .. })));
    }

    #[test]
    fn cap_of_one_censors_survivors() {
        let env = presets::e_weak();
        let s = simulate_batch(&env, 500, 1, &McPlan::new(2, 4)).unwrap();
        assert!(s.iter().all(|x| x.zeta == 1));
        assert!(s.iter().any(|x| x.censored));
    }

    #[test]
    fn walk_definitions() {
        let env = presets::e_weak2();
        let mut rng = McPlan::default().rng(1);
        for _ in 0..200 {
            let w = sample_walk(&env, &mut rng, 1, false).unwrap();
            assert!(w.tau <= 1);
            assert_eq!(w.tau == 1, w.path[1] < 0.0);
        }
        let w = sample_walk(&env, &mut rng, 30, true).unwrap();
        let l = w.path.iter().copied().fold(f64::INFINITY, f64::min);
        let m = w.path[1..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(w.l, l);
        assert_eq!(w.m, m);
        assert_eq!(w.path[w.tau], l);
        assert!(w.path[..w.tau].iter().all(|&s| s > l));
    }

    #[test]
    fn one_step_tilted_walk() {
        let env = presets::e_weak();
        let s = walk_stats(&env, 1, 40_000, 1.0, true, &McPlan::new(11, 8)).unwrap();
        assert!(s.max_negative.covers(0.5, 3.0));
        assert!(s.exp_max_negative.covers(0.5 * (-1.0f64).exp(), 3.0));
    }
}
