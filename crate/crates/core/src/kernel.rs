//! The kernel sequences `H_n`, `H*_n` and the functional `B_n(s)`.
//!
//! Every quantity here is an expectation over an environment sequence of a
//! product built from suffix compositions `F_{i,n+1}(0)`. Reading the
//! sequence backwards turns the suffix compositions into a running value:
//! with `v_0 = 1 - s` and `v_k = 1 - F_{c_k}(1 - v_{k-1})`, the `k`-th value
//! is the complement of the composition of the last `k` laws. A single
//! backward path of length `L` therefore yields the integrand for every
//! horizon `0..=L` in `O(L)`, both in exact enumeration (a depth-first walk
//! sharing prefixes) and in Monte Carlo.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::env::{EnvModel, RegimeKind};
use crate::error::{Error, Result};
use crate::math::{exp, log, one_minus_pow_complement, pow};
use crate::rng::{map_indexed, McPlan};
use crate::stats::{merge_columns, pairwise_reduce, Estimate, MeanVar};

/// Default cap on the number of enumerated environment sequences.
pub const DEFAULT_BUDGET: f64 = 2e7;

/// Monte Carlo routines refuse to run below this many samples.
pub const MIN_SAMPLES: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Method {
    Exact,
    DirectMc,
    TiltedMc,
    Synthetic,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::DirectMc => "direct_mc",
            Method::TiltedMc => "tilted_mc",
            Method::Synthetic => "synthetic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum McMode {
    /// Sample environments from their own law, weight one.
    Direct,
    /// Sample from the tilted law and reweight by `gamma^k e^{-delta S_k}`.
    Tilted,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SeriesEntry {
    pub value: f64,
    pub se: f64,
    pub method: Method,
}

impl SeriesEntry {
    pub fn exact(value: f64) -> Self {
        Self { value, se: 0.0, method: Method::Exact }
    }

    pub fn estimate(&self) -> Estimate {
        Estimate { value: self.value, se: self.se }
    }
}

/// `H_n` and `H*_n` for `n = 0..=N`, with the constants bounding their tails.
///
/// `hstar[0]` is `R_1`. The bound `H_n <= tail_const * gamma^{n+1}` holds with
/// `tail_const = E[G'(1)]`, and the same with `tail_const_star =
/// E[G'(1) / (1 - G(0))]` for `H*_n`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KernelSeries {
    pub h: Vec<SeriesEntry>,
    pub hstar: Vec<SeriesEntry>,
    pub tail_const: f64,
    pub tail_const_star: f64,
    pub gamma: f64,
    pub delta: f64,
    pub kind: Option<RegimeKind>,
}

impl KernelSeries {
    /// A hand-made series, used to exercise the recurrence on known inputs.
    pub fn synthetic(h: Vec<f64>, hstar: Vec<f64>, gamma: f64, tail_const: f64) -> Result<Self> {
        if h.len() != hstar.len() || h.is_empty() {
            return Err(Error::Domain("h and hstar must be non-empty and equally long".into()));
        }
        if h.iter().chain(&hstar).any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::Domain("kernel values must be finite and non-negative".into()));
        }
        let entry = |value| SeriesEntry { value, se: 0.0, method: Method::Synthetic };
        Ok(Self {
            h: h.into_iter().map(entry).collect(),
            hstar: hstar.into_iter().map(entry).collect(),
            tail_const,
            tail_const_star: tail_const,
            gamma,
            delta: 1.0,
            kind: None,
        })
    }

    /// Largest index available.
    pub fn n_max(&self) -> usize {
        self.h.len() - 1
    }

    /// Exact entries up to their length, Monte Carlo entries afterwards.
    pub fn splice(exact: &KernelSeries, mc: &KernelSeries) -> KernelSeries {
        let mut out = mc.clone();
        for (i, (h, hs)) in exact.h.iter().zip(&exact.hstar).enumerate() {
            if i < out.h.len() {
                out.h[i] = *h;
                out.hstar[i] = *hs;
            } else {
                out.h.push(*h);
                out.hstar.push(*hs);
            }
        }
        out
    }

    /// Whether `H_n` sits under `tail_const * gamma^{n+1}`, allowing
    /// `slack` standard errors for estimated entries.
    pub fn within_bound(&self, n: usize, slack: f64) -> bool {
        let bound = self.tail_const * pow(self.gamma, (n + 1) as f64);
        let e = &self.h[n];
        e.value <= bound * (1.0 + 1e-12) + slack * e.se
    }

    pub fn h_values(&self) -> Vec<f64> {
        self.h.iter().map(|e| e.value).collect()
    }

    pub fn hstar_values(&self) -> Vec<f64> {
        self.hstar.iter().map(|e| e.value).collect()
    }
}

/// `(delta, gamma, kind)`, falling back to `(1, E[e^X], None)` when the
/// environment is not classified as subcritical.
fn tilt_params(env: &EnvModel) -> (f64, f64, Option<RegimeKind>) {
    match env.classify() {
        Ok(r) => (r.delta, r.gamma, Some(r.kind)),
        Err(_) => (1.0, env.cumulant(1.0).0, None),
    }
}

fn series_shell(env: &EnvModel, delta: f64, gamma: f64, kind: Option<RegimeKind>) -> KernelSeries {
    KernelSeries {
        h: Vec::new(),
        hstar: Vec::new(),
        tail_const: env.immigration_mean(),
        tail_const_star: env.immigration_mean_normalized(),
        gamma,
        delta,
        kind,
    }
}

/// Geometry of a backward path.
#[derive(Debug, Clone, Copy)]
struct PathShape {
    /// Initial complement value `1 - s`.
    v0: f64,
    /// The first state read (the last generation) contributes its offspring
    /// law only, not an immigration factor.
    skip_first_g: bool,
}

const H_SHAPE: PathShape = PathShape { v0: 1.0, skip_first_g: true };

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct Compensated {
    sum: f64,
    comp: f64,
}

impl Compensated {
    #[inline]
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }

    fn merge(&self, other: &Self) -> Self {
        let mut out = *self;
        out.add(other.sum);
        out.add(other.comp);
        out
    }
}

type Columns<const M: usize> = Vec<[Compensated; M]>;

/// Sum over every state sequence of length `0..=depth` of
/// `weight * P_k * terminal(v_k)`, where the path weight is the product of
/// `step_weights` along the sequence.
fn enumerate<const M: usize, T>(env: &EnvModel, shape: PathShape, depth: usize, step_weights: &[f64], terminal: &T) -> Vec<[f64; M]>
where
    T: Fn(f64) -> [f64; M] + Sync,
{
    struct Walk<'a, const M: usize, T> {
        env: &'a EnvModel,
        shape: PathShape,
        depth: usize,
        w: &'a [f64],
        terminal: &'a T,
    }

    impl<const M: usize, T: Fn(f64) -> [f64; M]> Walk<'_, M, T> {
        fn visit(&self, k: usize, v: f64, prod: f64, weight: f64, acc: &mut Columns<M>) {
            let t = (self.terminal)(v);
            let scale = weight * prod;
            for (a, x) in acc[k].iter_mut().zip(t) {
                a.add(scale * x);
            }
            if k == self.depth {
                return;
            }
            for i in 0..self.env.len() {
                let (next_v, next_prod) = self.step(k, i, v, prod);
                self.visit(k + 1, next_v, next_prod, weight * self.w[i], acc);
            }
        }

        #[inline]
        fn step(&self, k: usize, i: usize, v: f64, prod: f64) -> (f64, f64) {
            let s = &self.env.states()[i];
            let g = if k == 0 && self.shape.skip_first_g { 1.0 } else { 1.0 - s.immigration().eval_complement(v) };
            (s.offspring().eval_complement(v), prod * g)
        }
    }

    let walk = Walk { env, shape, depth, w: step_weights, terminal };
    let mut root: Columns<M> = vec![[Compensated::default(); M]; depth + 1];
    let t = terminal(shape.v0);
    for (a, x) in root[0].iter_mut().zip(t) {
        a.add(x);
    }
    if depth > 0 {
        let subtrees = map_indexed(env.len(), |i| {
            let mut acc: Columns<M> = vec![[Compensated::default(); M]; depth + 1];
            let (v, p) = walk.step(0, i, shape.v0, 1.0);
            walk.visit(1, v, p, step_weights[i], &mut acc);
            acc
        });
        let merged = pairwise_reduce(&subtrees, &|a: &Columns<M>, b: &Columns<M>| {
            a.iter().zip(b).map(|(x, y)| core::array::from_fn(|j| x[j].merge(&y[j]))).collect()
        })
        .expect("at least one state");
        for (r, m) in root.iter_mut().zip(&merged) {
            for (a, b) in r.iter_mut().zip(m) {
                *a = a.merge(b);
            }
        }
    }
    root.iter().map(|c| core::array::from_fn(|j| c[j].value())).collect()
}

fn check_budget(env: &EnvModel, sequences_exp: usize, budget: f64) -> Result<()> {
    let k = env.len() as f64;
    let needed = pow(k, sequences_exp as f64);
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    Ok(())
}

/// `H_n`, `H*_n` for `n <= n_max` by summing over all `K^{n+1}` sequences.
pub fn kernel_exact(env: &EnvModel, n_max: usize) -> Result<KernelSeries> {
    kernel_exact_with_budget(env, n_max, DEFAULT_BUDGET)
}

pub fn kernel_exact_with_budget(env: &EnvModel, n_max: usize, budget: f64) -> Result<KernelSeries> {
    check_budget(env, n_max + 1, budget)?;
    let (delta, gamma, kind) = tilt_params(env);
    let terminal = |v: f64| [env.g0_complement(v), env.g0_complement_normalized(v)];
    let sums = enumerate(env, H_SHAPE, n_max + 1, env.probs(), &terminal);
    let mut out = series_shell(env, delta, gamma, kind);
    for s in &sums[1..] {
        out.h.push(SeriesEntry::exact(s[0]));
        out.hstar.push(SeriesEntry::exact(s[1]));
    }
    Ok(out)
}

/// Per-sample columns for one backward path of `depth` states.
#[allow(clippy::too_many_arguments)]
fn mc_path<const M: usize, R, T>(
    env: &EnvModel,
    sampler: &EnvModel,
    shape: PathShape,
    depth: usize,
    log_gamma: Option<f64>,
    delta: f64,
    terminal: &T,
    rng: &mut R,
    acc: &mut [[MeanVar; M]],
) where
    R: Rng + ?Sized,
    T: Fn(f64) -> [f64; M],
{
    let mut v = shape.v0;
    let mut prod = 1.0;
    let mut s_sum = 0.0;
    for (k, col) in acc.iter_mut().enumerate() {
        if k > 0 {
            let i = sampler.sample_index(rng);
            let st = &env.states()[i];
            if !(k == 1 && shape.skip_first_g) {
                prod *= 1.0 - st.immigration().eval_complement(v);
            }
            v = st.offspring().eval_complement(v);
            s_sum += st.x();
        }
        let weight = match log_gamma {
            Some(lg) => exp(k as f64 * lg - delta * s_sum),
            None => 1.0,
        };
        let t = terminal(v);
        for (a, x) in col.iter_mut().zip(t) {
            a.push(weight * prod * x);
        }
        if k == depth {
            break;
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn run_mc<const M: usize, T>(
    env: &EnvModel,
    sampler: &EnvModel,
    shape: PathShape,
    depth: usize,
    log_gamma: Option<f64>,
    delta: f64,
    samples: u64,
    plan: &McPlan,
    terminal: &T,
) -> Vec<[MeanVar; M]>
where
    T: Fn(f64) -> [f64; M] + Sync,
{
    let blocks = plan.map_blocks(samples, |stream, count| {
        let mut rng = plan.rng(stream);
        let mut acc = vec![[MeanVar::new(); M]; depth + 1];
        for _ in 0..count {
            mc_path(env, sampler, shape, depth, log_gamma, delta, terminal, &mut rng, &mut acc);
        }
        acc
    });
    // transpose to columns of accumulators so the shared merge helper applies
    let per_component: Vec<Vec<Vec<MeanVar>>> =
        (0..M).map(|j| blocks.iter().map(|b| b.iter().map(|c| c[j]).collect()).collect()).collect();
    let merged: Vec<Vec<MeanVar>> = per_component
        .iter()
        .map(|blocks| pairwise_reduce(blocks, &merge_columns).expect("at least one stream"))
        .collect();
    (0..=depth).map(|k| core::array::from_fn(|j| merged[j][k])).collect()
}

/// Monte Carlo estimates of `H_n`, `H*_n` for `n <= n_max`.
pub fn kernel_mc_series(env: &EnvModel, n_max: usize, samples: u64, mode: McMode, plan: &McPlan) -> Result<KernelSeries> {
    if samples < MIN_SAMPLES {
        return Err(Error::TooFewSamples { min: MIN_SAMPLES, got: samples });
    }
    let (delta, gamma, kind) = match mode {
        McMode::Tilted => {
            let r = env.classify()?;
            (r.delta, r.gamma, Some(r.kind))
        }
        McMode::Direct => tilt_params(env),
    };
    let (sampler, log_gamma, method) = match mode {
        McMode::Direct => (env.clone(), None, Method::DirectMc),
        McMode::Tilted => (env.tilt(delta), Some(log(gamma)), Method::TiltedMc),
    };
    let terminal = |v: f64| [env.g0_complement(v), env.g0_complement_normalized(v)];
    let cols = run_mc(env, &sampler, H_SHAPE, n_max + 1, log_gamma, delta, samples, plan, &terminal);
    let mut out = series_shell(env, delta, gamma, kind);
    for c in &cols[1..] {
        let (h, hs) = (c[0].estimate(), c[1].estimate());
        out.h.push(SeriesEntry { value: h.value, se: h.se, method });
        out.hstar.push(SeriesEntry { value: hs.value, se: hs.se, method });
    }
    Ok(out)
}

/// Monte Carlo estimate of `(H_n, H*_n)`.
pub fn kernel_mc(env: &EnvModel, n: usize, samples: u64, mode: McMode, plan: &McPlan) -> Result<(Estimate, Estimate)> {
    let s = kernel_mc_series(env, n, samples, mode, plan)?;
    Ok((s.h[n].estimate(), s.hstar[n].estimate()))
}

/// `R_1 = P(zeta > 1)`, which equals `H*_0`.
pub fn r1(env: &EnvModel) -> Result<f64> {
    if let Some(state) = env.state_without_immigration() {
        return Err(Error::NoImmigration { state });
    }
    Ok(env
        .states()
        .iter()
        .zip(env.probs())
        .map(|(s, p)| p * env.g0_complement_normalized(s.offspring().eval_complement(1.0)))
        .sum())
}

/// Argument `s` of `B_n(s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BArgument {
    Fixed(f64),
    /// `s = F_{n+1}(0)` drawn from an extra generation, which also enters the
    /// tilt weight. With `InitialPgf::G0` this gives `gamma^{n+1} B_n = H_n`.
    NextGeneration,
}

/// The initial generating function `B`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialPgf {
    /// An independent copy of the immigration law.
    G0,
    /// `(G_0(s) - G_0(0)) / (1 - G_0(0))`.
    G0Normalized,
    /// `s^z`.
    Power(u32),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BMethod {
    Exact,
    TiltedMc { samples: u64, plan: McPlan },
}

/// `B_k(s) = E^[(1 - B(F_{0,k}(s))) prod_{i<=k} G_i(F_{i,k}(s)) e^{-delta S_k}]`
/// for `k = 0..=n`, under the tilted measure and without any power of gamma.
pub fn b_series(env: &EnvModel, arg: BArgument, init: InitialPgf, n: usize, method: BMethod) -> Result<Vec<Estimate>> {
    let regime = env.classify()?;
    let (delta, gamma) = (regime.delta, regime.gamma);
    let (shape, offset) = match arg {
        BArgument::Fixed(s) => {
            if !(0.0..=1.0).contains(&s) {
                return Err(Error::Domain(alloc::format!("argument s = {s} outside [0, 1]")));
            }
            (PathShape { v0: 1.0 - s, skip_first_g: false }, 0)
        }
        BArgument::NextGeneration => (H_SHAPE, 1),
    };
    let terminal = |v: f64| {
        [match init {
            InitialPgf::G0 => env.g0_complement(v),
            InitialPgf::G0Normalized => env.g0_complement_normalized(v),
            InitialPgf::Power(z) => one_minus_pow_complement(v, f64::from(z)),
        }]
    };
    let depth = n + offset;
    let values: Vec<Estimate> = match method {
        BMethod::Exact => {
            check_budget(env, depth, DEFAULT_BUDGET)?;
            // tilted probability times e^{-delta x} is p / gamma
            let w: Vec<f64> = env.probs().iter().map(|p| p / gamma).collect();
            enumerate(env, shape, depth, &w, &terminal).iter().map(|c| Estimate::exact(c[0])).collect()
        }
        BMethod::TiltedMc { samples, plan } => {
            if samples < MIN_SAMPLES {
                return Err(Error::TooFewSamples { min: MIN_SAMPLES, got: samples });
            }
            let sampler = env.tilt(delta);
            run_mc(env, &sampler, shape, depth, Some(0.0), delta, samples, &plan, &terminal)
                .iter()
                .map(|c| c[0].estimate())
                .collect()
        }
    };
    Ok(values[offset..].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::presets;
    use crate::laws::PgfLaw;

    fn e() -> f64 {
        core::f64::consts::E
    }

    #[test]
    fn d1_closed_forms() {
        let k = kernel_exact(&presets::d1(), 3).unwrap();
        let h0 = 1.0 - (-1.0f64 / 3.0).exp();
        assert!((k.h[0].value - h0).abs() < 1e-15);
        assert!((k.h[0].value - 0.283469).abs() < 5e-7);
        let h1 = (1.0 - (-1.0f64 / 7.0).exp()) * (-1.0f64 / 3.0).exp();
        assert!((k.h[1].value - h1).abs() < 1e-15);
        assert!((k.h[1].value - 0.095385).abs() < 5e-6);
        assert!((k.hstar[1].value - h1 / (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        assert!((k.hstar[1].value - 0.150899).abs() < 5e-7);
        assert!(k.h.iter().all(|e| e.se == 0.0 && e.method == Method::Exact));
    }

    #[test]
    fn weak_h0_two_term_mixture() {
        let env = presets::e_weak();
        let k = kernel_exact(&env, 0).unwrap();
        let a = e() / 3.0;
        let b = (1.0 / e()) / 1.5;
        // G is Poisson(1) in both states, so the G0 mixture is one term
        let want = 0.3 * (1.0 - (-a).exp()) + 0.7 * (1.0 - (-b).exp());
        assert!((k.h[0].value - want).abs() < 1e-15);
    }

    #[test]
    fn r1_examples() {
        let want = 1.0 - ((-1.0f64 / 3.0).exp() - (-1.0f64).exp()) / (1.0 - (-1.0f64).exp());
        let got = r1(&presets::d1()).unwrap();
        assert!((got - want).abs() < 1e-15);
        assert!((got - 0.448440).abs() < 1e-6);
        let k = kernel_exact(&presets::d1(), 0).unwrap();
        assert!((k.hstar[0].value - got).abs() < 1e-15);

        let no_zero = EnvModel::from_triples([(
            PgfLaw::table(vec![0.0, 0.5, 0.5]).unwrap(),
            PgfLaw::poisson(1.0).unwrap(),
            1.0,
        )])
        .unwrap();
        assert!((r1(&no_zero).unwrap() - 1.0).abs() < 1e-15);

        let none = EnvModel::from_triples([(
            PgfLaw::linear_fractional(0.5, 0.5).unwrap(),
            PgfLaw::table(vec![1.0]).unwrap(),
            1.0,
        )])
        .unwrap();
        assert!(matches!(r1(&none), Err(Error::NoImmigration { state: 0 })));
    }

    #[test]
    fn no_immigration_kernel_vanishes() {
        let env = EnvModel::from_triples([(
            PgfLaw::linear_fractional(0.5, 0.5).unwrap(),
            PgfLaw::table(vec![1.0]).unwrap(),
            1.0,
        )])
        .unwrap();
        let k = kernel_exact(&env, 5).unwrap();
        assert!(k.h.iter().all(|e| e.value == 0.0));
    }

    #[test]
    fn tilted_mc_is_exact_on_constant_env() {
        let env = presets::d1();
        let (h, _) = kernel_mc(&env, 1, 100, McMode::Tilted, &McPlan::new(3, 4)).unwrap();
        let exact = kernel_exact(&env, 1).unwrap().h[1].value;
        assert!((h.value - exact).abs() < 1e-14);
        assert!(h.se < 1e-14);
    }

    #[test]
    fn too_few_samples() {
        let r = kernel_mc(&presets::d1(), 1, 99, McMode::Direct, &McPlan::default());
        assert!(matches!(r, Err(Error::TooFewSamples { .. })));
    }

    #[test]
    fn budget_error() {
        let r = kernel_exact(&presets::e_weak(), 30);
        assert!(matches!(r, Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn b_series_examples() {
        let env = presets::d1();
        let b = b_series(&env, BArgument::Fixed(0.0), InitialPgf::Power(1), 1, BMethod::Exact).unwrap();
        let want = (1.0 / 3.0) * (-1.0f64).exp() * 2.0;
        assert!((b[1].value - want).abs() < 1e-15);
        assert!((b[1].value - 0.245253).abs() < 5e-7);
        let b = b_series(&presets::e_weak(), BArgument::Fixed(1.0), InitialPgf::Power(3), 4, BMethod::Exact).unwrap();
        assert!(b.iter().all(|x| x.value == 0.0));
    }

    #[test]
    fn b_series_gamma_identity() {
        for env in [presets::d1(), presets::e_weak(), presets::e_strong2()] {
            let gamma = env.classify().unwrap().gamma;
            let h = kernel_exact(&env, 8).unwrap();
            let b = b_series(&env, BArgument::NextGeneration, InitialPgf::G0, 8, BMethod::Exact).unwrap();
            for (n, (bn, hn)) in b.iter().zip(&h.h).enumerate() {
                let lhs = bn.value * gamma.powi(n as i32 + 1);
                assert!((lhs - hn.value).abs() < 1e-12, "n={n}: {lhs} vs {}", hn.value);
            }
        }
    }

    #[test]
    fn b_series_fixed_argument_on_constant_env() {
        let env = presets::d1();
        let gamma = env.classify().unwrap().gamma;
        let s = 1.0 - env.states()[0].offspring().eval_complement(1.0);
        let h = kernel_exact(&env, 6).unwrap();
        let b = b_series(&env, BArgument::Fixed(s), InitialPgf::G0, 6, BMethod::Exact).unwrap();
        for (n, (bn, hn)) in b.iter().zip(&h.h).enumerate() {
            assert!((bn.value * gamma.powi(n as i32) - hn.value).abs() < 1e-14);
        }
    }
}
