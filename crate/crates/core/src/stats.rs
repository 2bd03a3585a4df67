//! Streaming moments and fixed-order reductions.

use alloc::vec::Vec;

use crate::math::sqrt;

/// Welford accumulator. Merging follows Chan et al., so a reduction tree of
/// accumulators reproduces the same bits for the same tree.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MeanVar {
    count: u64,
    mean: f64,
    m2: f64,
}

impl MeanVar {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&self, other: &Self) -> Self {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let n = self.count + other.count;
        let delta = other.mean - self.mean;
        let nf = n as f64;
        Self {
            count: n,
            mean: self.mean + delta * (other.count as f64 / nf),
            m2: self.m2 + other.m2 + delta * delta * (self.count as f64 * other.count as f64 / nf),
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; zero below two observations.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).max(0.0)
        }
    }

    /// Standard error of the mean: sample sd / sqrt(count).
    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            sqrt(self.variance() / self.count as f64)
        }
    }

    pub fn estimate(&self) -> Estimate {
        Estimate { value: self.mean(), se: self.std_error() }
    }
}

/// A point estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { value, se: 0.0 }
    }

    /// `|value - target| <= k * se`.
    pub fn covers(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.se
    }
}

/// Reduce `items` by splitting in halves recursively. The tree shape only
/// depends on `items.len()`.
pub fn pairwise_reduce<T, F>(items: &[T], f: &F) -> Option<T>
where
    T: Clone,
    F: Fn(&T, &T) -> T,
{
    match items.len() {
        0 => None,
        1 => Some(items[0].clone()),
        n => {
            let (a, b) = items.split_at(n / 2);
            let left = pairwise_reduce(a, f)?;
            let right = pairwise_reduce(b, f)?;
            Some(f(&left, &right))
        }
    }
}

/// Element-wise merge of equally long accumulator vectors.
#[allow(clippy::ptr_arg)] // shaped for `pairwise_reduce` over `Vec` items
pub(crate) fn merge_columns(a: &Vec<MeanVar>, b: &Vec<MeanVar>) -> Vec<MeanVar> {
    a.iter().zip(b).map(|(x, y)| x.merge(y)).collect()
}
