//! Probability generating functions on the non-negative integers.
//!
//! Laws are evaluated either directly, `F(s)`, or through the complement
//! `1 - F(1 - v)`. The complement form keeps full relative precision when
//! `v` (a survival probability) is tiny, which is the regime that matters for
//! long compositions `F_{0,n}(0)`.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Binomial, Distribution, Gamma, Geometric, Poisson};

use crate::error::{Error, Result};
use crate::math::{exp, expm1, fabs, lgamma, log, one_minus_pow_complement};

/// Tolerance on `sum(p) - 1` for table laws before they are renormalized.
pub const TABLE_NORMALIZATION_TOL: f64 = 1e-9;

/// Below this many individuals offspring are drawn one by one.
pub const BATCH_THRESHOLD: u64 = 10_000;

/// A law on `{0, 1, 2, ...}` given by its generating function.
///
/// `LinearFractional { m, b }` is parameterized by `1 - F(s) = m(1-s) / (1 + b(1-s))`,
/// so `m` is the mean and `p_0 = 1 - m/(1+b)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "raw::RawLaw", into = "raw::RawLaw"))]
pub enum PgfLaw {
    LinearFractional { m: f64, b: f64 },
    Poisson { lambda: f64 },
    /// `p_k = (1 - q) q^k`.
    Geometric { q: f64 },
    /// Explicit probabilities `p_0, p_1, ...`.
    Table(Vec<f64>),
}

impl PgfLaw {
    pub fn linear_fractional(m: f64, b: f64) -> Result<Self> {
        let law = Self::LinearFractional { m, b };
        law.validate()?;
        Ok(law)
    }

    pub fn poisson(lambda: f64) -> Result<Self> {
        let law = Self::Poisson { lambda };
        law.validate()?;
        Ok(law)
    }

    pub fn geometric(q: f64) -> Result<Self> {
        let law = Self::Geometric { q };
        law.validate()?;
        Ok(law)
    }

    /// Table law; renormalized when the mass is within
    /// [`TABLE_NORMALIZATION_TOL`] of one, rejected otherwise.
    pub fn table(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidLaw("table law needs at least one entry".into()));
        }
        if let Some(bad) = p.iter().find(|x| !x.is_finite() || **x < 0.0) {
            return Err(Error::InvalidLaw(format!("table entry {bad} is not a probability")));
        }
        let total: f64 = p.iter().sum();
        if fabs(total - 1.0) > TABLE_NORMALIZATION_TOL {
            return Err(Error::InvalidLaw(format!("table probabilities sum to {total}")));
        }
        Ok(Self::Table(p.into_iter().map(|x| x / total).collect()))
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::LinearFractional { m, b } => {
                if !(m.is_finite() && m > 0.0) {
                    return Err(Error::InvalidLaw(format!("linear-fractional mean m = {m} must be positive")));
                }
                if !(b.is_finite() && b >= 0.0) {
                    return Err(Error::InvalidLaw(format!("linear-fractional b = {b} must be non-negative")));
                }
                if m > 1.0 + b {
                    return Err(Error::InvalidLaw(format!("linear-fractional needs m <= 1 + b, got m = {m}, b = {b}")));
                }
                Ok(())
            }
            Self::Poisson { lambda } => {
                if lambda.is_finite() && lambda > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidLaw(format!("Poisson rate {lambda} must be positive")))
                }
            }
            Self::Geometric { q } => {
                if q > 0.0 && q < 1.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidLaw(format!("geometric q = {q} must lie in (0, 1)")))
                }
            }
            Self::Table(ref p) => {
                let total: f64 = p.iter().sum();
                if p.is_empty() || p.iter().any(|x| !x.is_finite() || *x < 0.0) || fabs(total - 1.0) > 1e-12 {
                    Err(Error::InvalidLaw("table law is not a normalized probability vector".into()))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// `F(s) = sum_j p_j s^j`.
    pub fn eval(&self, s: f64) -> f64 {
        match *self {
            Self::LinearFractional { m, b } => {
                let v = 1.0 - s;
                1.0 - m * v / (1.0 + b * v)
            }
            Self::Poisson { lambda } => exp(lambda * (s - 1.0)),
            Self::Geometric { q } => (1.0 - q) / (1.0 - q * s),
            Self::Table(ref p) => p.iter().rev().fold(0.0, |acc, &pj| acc * s + pj),
        }
    }

    /// `1 - F(1 - v)`, accurate to full relative precision for small `v`.
    pub fn eval_complement(&self, v: f64) -> f64 {
        match *self {
            Self::LinearFractional { m, b } => m * v / (1.0 + b * v),
            Self::Poisson { lambda } => -expm1(-lambda * v),
            Self::Geometric { q } => {
                let m = q / (1.0 - q);
                m * v / (1.0 + m * v)
            }
            Self::Table(ref p) => p
                .iter()
                .enumerate()
                .skip(1)
                .map(|(j, &pj)| pj * one_minus_pow_complement(v, j as f64))
                .sum(),
        }
    }

    /// `m(F) = sum_j j p_j`, which is also `F'(1)`.
    pub fn mean(&self) -> f64 {
        match *self {
            Self::LinearFractional { m, .. } => m,
            Self::Poisson { lambda } => lambda,
            Self::Geometric { q } => q / (1.0 - q),
            Self::Table(ref p) => p.iter().enumerate().map(|(j, &pj)| j as f64 * pj).sum(),
        }
    }

    /// `E[xi^2]`.
    pub fn second_moment(&self) -> f64 {
        match *self {
            Self::LinearFractional { m, b } => m * (1.0 + 2.0 * b),
            Self::Poisson { lambda } => lambda + lambda * lambda,
            Self::Geometric { q } => q * (1.0 + q) / ((1.0 - q) * (1.0 - q)),
            Self::Table(ref p) => p.iter().enumerate().map(|(j, &pj)| (j * j) as f64 * pj).sum(),
        }
    }

    /// `P(xi = 0) = F(0)`.
    pub fn p0(&self) -> f64 {
        match *self {
            Self::LinearFractional { m, b } => 1.0 - m / (1.0 + b),
            Self::Poisson { lambda } => exp(-lambda),
            Self::Geometric { q } => 1.0 - q,
            Self::Table(ref p) => p[0],
        }
    }

    /// Probability mass at `k`.
    pub fn pmf(&self, k: u64) -> f64 {
        match *self {
            Self::LinearFractional { m, b } => {
                if k == 0 {
                    self.p0()
                } else {
                    let q = b / (1.0 + b);
                    m * q.powi_u64(k - 1) / ((1.0 + b) * (1.0 + b))
                }
            }
            Self::Poisson { lambda } => exp(-lambda + k as f64 * log(lambda) - lgamma(k as f64 + 1.0)),
            Self::Geometric { q } => (1.0 - q) * q.powi_u64(k),
            Self::Table(ref p) => p.get(k as usize).copied().unwrap_or(0.0),
        }
    }

    /// The linear-fractional representation, when the law has one.
    pub fn as_lf(&self) -> Option<LfRep> {
        match *self {
            Self::LinearFractional { m, b } => Some(LfRep { m, b }),
            Self::Geometric { q } => {
                let m = q / (1.0 - q);
                Some(LfRep { m, b: m })
            }
            _ => None,
        }
    }

    /// Standardized truncated second moment `sum_{j >= a} j^2 p_j / m^2`.
    ///
    /// Closed form for the linear-fractional family (geometric included);
    /// Poisson tails are summed until the relative increment drops below
    /// `1e-10`. Returns `f64::INFINITY` for a divergent moment.
    pub fn theta(&self, a: u64) -> Result<f64> {
        if a == 0 {
            return Err(Error::Domain("truncation level a must be a positive integer".into()));
        }
        let m = self.mean();
        if m <= 0.0 {
            return Err(Error::ZeroMean);
        }
        let tail = match (self, self.as_lf()) {
            (_, Some(LfRep { m, b })) => {
                let q = b / (1.0 + b);
                let a = a as f64;
                let one_q = 1.0 - q;
                let bracket = a * a / one_q + 2.0 * a * q / (one_q * one_q) + q * (1.0 + q) / (one_q * one_q * one_q);
                m / ((1.0 + b) * (1.0 + b)) * q.powi_u64(a as u64 - 1) * bracket
            }
            (Self::Poisson { lambda }, None) => {
                // j^2 = j(j-1) + j
                let lambda = *lambda;
                lambda * lambda * poisson_upper_tail(lambda, a as i64 - 2) + lambda * poisson_upper_tail(lambda, a as i64 - 1)
            }
            (Self::Table(p), None) => p
                .iter()
                .enumerate()
                .skip(a as usize)
                .map(|(j, &pj)| (j * j) as f64 * pj)
                .sum(),
            _ => unreachable!("linear-fractional variants handled above"),
        };
        Ok(tail / (m * m))
    }

    /// Precomputed sampler for repeated draws.
    pub fn sampler(&self) -> LawSampler {
        LawSampler::new(self)
    }

    /// One draw from the law.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        self.sampler().sample(rng)
    }
}

/// `P(N >= k)` for `N ~ Poisson(lambda)`, summed upward from `k`.
fn poisson_upper_tail(lambda: f64, k: i64) -> f64 {
    if k <= 0 {
        return 1.0;
    }
    let mut j = k as f64;
    let mut term = exp(-lambda + j * log(lambda) - lgamma(j + 1.0));
    let mut sum = 0.0;
    loop {
        sum += term;
        j += 1.0;
        term *= lambda / j;
        if j > lambda && term <= 1e-17 * sum {
            break;
        }
        if term == 0.0 {
            break;
        }
    }
    sum
}

trait PowU64 {
    fn powi_u64(self, k: u64) -> f64;
}

impl PowU64 for f64 {
    fn powi_u64(self, k: u64) -> f64 {
        crate::math::pow(self, k as f64)
    }
}

/// Sampling state for one law: distributions are built once and reused.
#[derive(Debug, Clone)]
pub enum LawSampler {
    LinearFractional { p_nonzero: f64, b: f64, extra: Option<Geometric> },
    Poisson { lambda: f64, dist: Poisson<f64> },
    Geometric { q: f64, dist: Geometric },
    Table { cumulative: Vec<f64>, probs: Vec<f64> },
}

impl LawSampler {
    pub fn new(law: &PgfLaw) -> Self {
        match *law {
            PgfLaw::LinearFractional { m, b } => Self::LinearFractional {
                p_nonzero: m / (1.0 + b),
                b,
                extra: (b > 0.0).then(|| Geometric::new(1.0 / (1.0 + b)).expect("1/(1+b) in (0,1]")),
            },
            PgfLaw::Poisson { lambda } => Self::Poisson { lambda, dist: Poisson::new(lambda).expect("validated rate") },
            PgfLaw::Geometric { q } => Self::Geometric { q, dist: Geometric::new(1.0 - q).expect("validated q") },
            PgfLaw::Table(ref p) => {
                let mut acc = 0.0;
                let cumulative = p
                    .iter()
                    .map(|x| {
                        acc += x;
                        acc
                    })
                    .collect();
                Self::Table { cumulative, probs: p.clone() }
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match self {
            Self::LinearFractional { p_nonzero, extra, .. } => {
                if rng.random::<f64>() >= *p_nonzero {
                    0
                } else {
                    1 + extra.as_ref().map_or(0, |g| g.sample(rng))
                }
            }
            Self::Poisson { dist, .. } => dist.sample(rng) as u64,
            Self::Geometric { dist, .. } => dist.sample(rng),
            Self::Table { cumulative, .. } => {
                let u = rng.random::<f64>();
                let idx = cumulative.partition_point(|&c| c <= u);
                idx.min(cumulative.len() - 1) as u64
            }
        }
    }

    /// Sum of `count` independent draws. Large counts use the law's
    /// convolution structure (binomial thinning, Poisson and negative
    /// binomial sums) instead of a loop.
    pub fn sample_sum<R: Rng + ?Sized>(&self, count: u64, rng: &mut R) -> u64 {
        if count < BATCH_THRESHOLD {
            return (0..count).map(|_| self.sample(rng)).sum();
        }
        match self {
            Self::LinearFractional { p_nonzero, b, .. } => {
                let k = binomial(count, *p_nonzero, rng);
                if *b == 0.0 || k == 0 {
                    k
                } else {
                    // each nonzero draw is 1 + Geometric(1/(1+b)) failures
                    k + negative_binomial(k, *b, rng)
                }
            }
            Self::Poisson { lambda, .. } => {
                let mean = *lambda * count as f64;
                Poisson::new(mean).map(|d| d.sample(rng) as u64).unwrap_or(u64::MAX)
            }
            Self::Geometric { q, .. } => negative_binomial(count, q / (1.0 - q), rng),
            Self::Table { probs, .. } => {
                let mut remaining = count;
                let mut rest = 1.0;
                let mut total = 0u64;
                for (j, &p) in probs.iter().enumerate() {
                    if remaining == 0 {
                        break;
                    }
                    let take = if rest <= p { remaining } else { binomial(remaining, (p / rest).min(1.0), rng) };
                    total = total.saturating_add((j as u64).saturating_mul(take));
                    remaining -= take;
                    rest -= p;
                }
                total
            }
        }
    }
}

fn binomial<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> u64 {
    if p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("p in (0,1)").sample(rng)
}

/// Failures before `r` successes, with odds `(1-p)/p = odds`, via the
/// Poisson-Gamma mixture.
fn negative_binomial<R: Rng + ?Sized>(r: u64, odds: f64, rng: &mut R) -> u64 {
    let rate = Gamma::new(r as f64, odds).expect("positive shape and scale").sample(rng);
    if rate <= 0.0 {
        return 0;
    }
    Poisson::new(rate).map(|d| d.sample(rng) as u64).unwrap_or(u64::MAX)
}

/// A composed linear-fractional map, `1 - F(s) = m(1-s) / (1 + b(1-s))`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LfRep {
    pub m: f64,
    pub b: f64,
}

impl LfRep {
    pub const IDENTITY: LfRep = LfRep { m: 1.0, b: 0.0 };

    /// Representation of `outer(inner(s))`.
    pub fn compose(outer: LfRep, inner: LfRep) -> LfRep {
        LfRep { m: outer.m * inner.m, b: inner.b + outer.b * inner.m }
    }

    pub fn eval(&self, s: f64) -> f64 {
        1.0 - self.eval_complement(1.0 - s)
    }

    pub fn eval_complement(&self, v: f64) -> f64 {
        self.m * v / (1.0 + self.b * v)
    }
}

/// `lf_compose(outer, inner)`: the closed-form composition.
pub fn lf_compose(outer: LfRep, inner: LfRep) -> LfRep {
    LfRep::compose(outer, inner)
}

/// `F_1(F_2(...F_n(s)...))` for the chain `laws = [F_1, ..., F_n]`; the
/// empty chain is the identity.
pub fn compose_chain(laws: &[PgfLaw], s: f64) -> f64 {
    if laws.is_empty() {
        return s;
    }
    1.0 - compose_chain_complement(laws, 1.0 - s)
}

/// `1 - F_{0,n}(1 - v)`.
pub fn compose_chain_complement(laws: &[PgfLaw], v: f64) -> f64 {
    let reps: Option<Vec<LfRep>> = laws.iter().map(PgfLaw::as_lf).collect();
    match reps {
        Some(reps) => reps
            .iter()
            .fold(LfRep::IDENTITY, |acc, &r| LfRep::compose(acc, r))
            .eval_complement(v),
        None => laws.iter().rev().fold(v, |acc, law| law.eval_complement(acc)),
    }
}

#[cfg(feature = "serde")]
mod raw {
    use super::PgfLaw;
    use alloc::string::String;
    use alloc::vec::Vec;

    #[derive(serde::Serialize, serde::Deserialize)]
    #[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
    pub(super) enum RawLaw {
        Lf { m: f64, b: f64 },
        Poisson { lambda: f64 },
        Geometric { q: f64 },
        Table { p: Vec<f64> },
    }

    impl TryFrom<RawLaw> for PgfLaw {
        type Error = String;

        fn try_from(raw: RawLaw) -> Result<Self, Self::Error> {
            let law = match raw {
                RawLaw::Lf { m, b } => PgfLaw::linear_fractional(m, b),
                RawLaw::Poisson { lambda } => PgfLaw::poisson(lambda),
                RawLaw::Geometric { q } => PgfLaw::geometric(q),
                RawLaw::Table { p } => PgfLaw::table(p),
            };
            law.map_err(|e| alloc::format!("{e}"))
        }
    }

    impl From<PgfLaw> for RawLaw {
        fn from(law: PgfLaw) -> Self {
            match law {
                PgfLaw::LinearFractional { m, b } => RawLaw::Lf { m, b },
                PgfLaw::Poisson { lambda } => RawLaw::Poisson { lambda },
                PgfLaw::Geometric { q } => RawLaw::Geometric { q },
                PgfLaw::Table(p) => RawLaw::Table { p },
            }
        }
    }
}
