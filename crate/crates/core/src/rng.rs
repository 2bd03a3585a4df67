//! Counter-based random streams.
//!
//! A run is split into `streams` blocks. Block `i` draws from ChaCha8 keyed
//! by the run seed with stream id `i`, so any block can be regenerated in
//! isolation and blocks may run on any thread in any order.

use alloc::vec::Vec;

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng as StreamRng;

/// Seed and stream count for a Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct McPlan {
    pub seed: u64,
    pub streams: u32,
}

impl Default for McPlan {
    fn default() -> Self {
        Self { seed: 1, streams: 64 }
    }
}

impl McPlan {
    pub fn new(seed: u64, streams: u32) -> Self {
        Self { seed, streams: streams.max(1) }
    }

    /// Generator for block `stream`.
    pub fn rng(&self, stream: u32) -> StreamRng {
        let mut rng = StreamRng::seed_from_u64(self.seed);
        rng.set_stream(u64::from(stream));
        rng
    }

    /// An independent plan for a sub-experiment labelled by `salt`.
    pub fn derive(&self, salt: u64) -> Self {
        Self { seed: splitmix64(self.seed ^ splitmix64(salt.wrapping_add(0x5bd1_e995))), streams: self.streams }
    }

    /// Number of samples assigned to each block; the first `total % streams`
    /// blocks take one extra.
    pub fn split(&self, total: u64) -> Vec<u64> {
        let k = u64::from(self.streams);
        let base = total / k;
        let extra = total % k;
        (0..k).map(|i| base + u64::from(i < extra)).collect()
    }

    /// Evaluate `f(stream, count)` for every block, in block order.
    pub fn map_blocks<T, F>(&self, total: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u32, u64) -> T + Sync + Send,
    {
        let counts = self.split(total);
        map_indexed(counts.len(), |i| f(i as u32, counts[i]))
    }
}

/// Evaluate `f(0..n)` and collect in index order; runs on the rayon pool
/// when the `parallel` feature is on.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
