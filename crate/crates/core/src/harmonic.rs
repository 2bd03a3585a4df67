//! Renewal functions of a mean-zero walk and their harmonicity.
//!
//! `U(x) = 1 + sum_n P(S_n >= -x, M_n < 0)` for `x >= 0` and
//! `V(x) = 1 + sum_n P(S_n < -x, L_n >= 0)` for `x <= 0`. Reversing time
//! turns the events into ladder epochs: `U(x) - 1` is the expected number of
//! strict descending ladder heights in `[-x, 0)`, `V(x) - 1` the expected
//! number of weak ascending ladder heights in `[0, -x)`. Both counts are
//! simulated ladder by ladder, stopping at the first height past the level.

use rand::Rng;

use crate::env::EnvModel;
use crate::error::{Error, Result};
use crate::math::{fabs, sqrt};
use crate::rng::McPlan;
use crate::stats::{pairwise_reduce, Estimate, MeanVar};

/// The walk must satisfy `|E[X]| <= MEAN_ZERO_TOL`.
pub const MEAN_ZERO_TOL: f64 = 1e-10;

pub const DEFAULT_EPOCHS_CAP: u64 = 1_000_000;

/// Slack for comparisons between partial sums, so that lattice walks revisit
/// a level exactly despite rounding in the accumulated sum.
const LEVEL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RenewalEstimate {
    pub x: f64,
    pub value: f64,
    pub se: f64,
    /// Step cap per sample (ladder estimator) or summation horizon.
    pub horizon: u64,
    pub samples: u64,
    /// Samples stopped by the cap before crossing the level.
    pub cap_hits: u64,
}

impl RenewalEstimate {
    fn exact_one(x: f64, horizon: u64) -> Self {
        Self { x, value: 1.0, se: 0.0, horizon, samples: 0, cap_hits: 0 }
    }

    pub fn estimate(&self) -> Estimate {
        Estimate { value: self.value, se: self.se }
    }

    pub fn cap_hit_fraction(&self) -> f64 {
        if self.samples == 0 {
            0.0
        } else {
            self.cap_hits as f64 / self.samples as f64
        }
    }
}

fn check_mean_zero(env: &EnvModel) -> Result<()> {
    let mean_x = env.mean_x();
    if fabs(mean_x) > MEAN_ZERO_TOL {
        return Err(Error::NotMeanZero { mean_x });
    }
    Ok(())
}

fn check_samples(samples: u64) -> Result<()> {
    if samples < 2 {
        return Err(Error::TooFewSamples { min: 2, got: samples });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy)]
enum Ladder {
    /// Strict descending heights `>= -level`.
    Descending,
    /// Weak ascending heights `< level`.
    Ascending,
}

/// Ladder heights counted before the walk passes `level`, and whether the
/// step cap stopped the sample first.
fn ladder_count<R: Rng + ?Sized>(env: &EnvModel, rng: &mut R, ladder: Ladder, level: f64, cap: u64) -> (u64, bool) {
    let states = env.states();
    let (mut s, mut h, mut count) = (0.0, 0.0, 0u64);
    for _ in 0..cap {
        s += states[env.sample_index(rng)].x();
        match ladder {
            Ladder::Descending => {
                if s < h - LEVEL_TOL {
                    if s < -level - LEVEL_TOL {
                        return (count, false);
                    }
                    count += 1;
                    h = s;
                }
            }
            Ladder::Ascending => {
                if s >= h - LEVEL_TOL {
                    if s >= level - LEVEL_TOL {
                        return (count, false);
                    }
                    count += 1;
                    h = h.max(s);
                }
            }
        }
    }
    (count, true)
}

fn run_counts<F>(samples: u64, plan: &McPlan, f: F) -> (MeanVar, u64)
where
    F: Fn(&mut crate::rng::StreamRng) -> (u64, bool) + Sync + Send,
{
    let blocks = plan.map_blocks(samples, |stream, count| {
        let mut rng = plan.rng(stream);
        let mut acc = MeanVar::new();
        let mut hits = 0u64;
        for _ in 0..count {
            let (c, capped) = f(&mut rng);
            acc.push(c as f64);
            hits += u64::from(capped);
        }
        (acc, hits)
    });
    pairwise_reduce(&blocks, &|a: &(MeanVar, u64), b: &(MeanVar, u64)| (a.0.merge(&b.0), a.1 + b.1)).expect("at least one stream")
}

fn renewal(env: &EnvModel, x: f64, ladder: Ladder, epochs_cap: u64, samples: u64, plan: &McPlan) -> Result<RenewalEstimate> {
    check_mean_zero(env)?;
    let level = fabs(x);
    if level == 0.0 {
        return Ok(RenewalEstimate::exact_one(x, epochs_cap));
    }
    check_samples(samples)?;
    let (acc, cap_hits) = run_counts(samples, plan, |rng| ladder_count(env, rng, ladder, level, epochs_cap));
    Ok(RenewalEstimate { x, value: 1.0 + acc.mean(), se: acc.std_error(), horizon: epochs_cap, samples, cap_hits })
}

/// `U(x)` for `x >= 0` by ladder counting.
pub fn renewal_u(env: &EnvModel, x: f64, epochs_cap: u64, samples: u64, plan: &McPlan) -> Result<RenewalEstimate> {
    if !(x >= 0.0) {
        return Err(Error::Domain(alloc::format!("U is evaluated at x >= 0, got {x}")));
    }
    renewal(env, x, Ladder::Descending, epochs_cap, samples, plan)
}

/// `V(x)` for `x <= 0` by ladder counting.
pub fn renewal_v(env: &EnvModel, x: f64, epochs_cap: u64, samples: u64, plan: &McPlan) -> Result<RenewalEstimate> {
    if !(x <= 0.0) {
        return Err(Error::Domain(alloc::format!("V is evaluated at x <= 0, got {x}")));
    }
    renewal(env, x, Ladder::Ascending, epochs_cap, samples, plan)
}

/// `U(x)` from the defining series truncated at `horizon`: counts the times
/// `n <= horizon` with `S_n >= -x` while the walk has stayed negative.
pub fn renewal_u_horizon(env: &EnvModel, x: f64, horizon: u64, samples: u64, plan: &McPlan) -> Result<RenewalEstimate> {
    check_mean_zero(env)?;
    if !(x >= 0.0) {
        return Err(Error::Domain(alloc::format!("U is evaluated at x >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(RenewalEstimate::exact_one(x, horizon));
    }
    check_samples(samples)?;
    let states = env.states();
    let (acc, cap_hits) = run_counts(samples, plan, |rng| {
        let (mut s, mut count) = (0.0, 0u64);
        for _ in 0..horizon {
            s += states[env.sample_index(rng)].x();
            if s >= -LEVEL_TOL {
                return (count, false);
            }
            if s >= -x - LEVEL_TOL {
                count += 1;
            }
        }
        (count, true)
    });
    Ok(RenewalEstimate { x, value: 1.0 + acc.mean(), se: acc.std_error(), horizon, samples, cap_hits })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Which {
    U,
    V,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HarmonicResidual {
    pub which: Which,
    pub x: f64,
    pub lhs: Estimate,
    pub rhs: Estimate,
    /// `lhs - rhs`, with the two sides estimated independently.
    pub residual: Estimate,
    pub cap_hits: u64,
}

/// `E[U(x + X); x + X >= 0] - U(x)` or `E[V(x + X); x + X < 0] - V(x)`.
/// Every renewal value uses its own derived stream plan.
pub fn harmonic_check(which: Which, env: &EnvModel, x: f64, epochs_cap: u64, samples: u64, plan: &McPlan) -> Result<HarmonicResidual> {
    check_mean_zero(env)?;
    let eval = |y: f64, salt: u64| -> Result<RenewalEstimate> {
        let p = plan.derive(salt);
        match which {
            Which::U => renewal_u(env, y, epochs_cap, samples, &p),
            Which::V => renewal_v(env, y, epochs_cap, samples, &p),
        }
    };
    let rhs = eval(x, 0)?;
    let mut lhs_value = 0.0;
    let mut lhs_var = 0.0;
    let mut cap_hits = rhs.cap_hits;
    for (i, (s, q)) in env.states().iter().zip(env.probs()).enumerate() {
        let y = x + s.x();
        // snap lattice points that rounding moved off zero
        let y = if fabs(y) <= LEVEL_TOL { 0.0 } else { y };
        let inside = match which {
            Which::U => y >= 0.0,
            Which::V => y < 0.0,
        };
        if !inside {
            continue;
        }
        let e = eval(y, i as u64 + 1)?;
        lhs_value += q * e.value;
        lhs_var += q * q * e.se * e.se;
        cap_hits += e.cap_hits;
    }
    let lhs = Estimate { value: lhs_value, se: sqrt(lhs_var) };
    let rhs_e = rhs.estimate();
    let residual = Estimate { value: lhs.value - rhs_e.value, se: sqrt(lhs_var + rhs_e.se * rhs_e.se) };
    Ok(HarmonicResidual { which, x, lhs, rhs: rhs_e, residual, cap_hits })
}
