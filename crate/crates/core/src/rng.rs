//! Reproducible random streams and deterministic Monte Carlo fan-out.
//!
//! Every sampler takes a plain `&mut impl Rng`; callers obtain generators from
//! an [`RngStream`], which maps `(seed, stream_id)` onto an independent ChaCha8
//! stream. Parallel work is split into fixed-size chunks, each with its own
//! child stream, so results do not depend on the number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Samples handled by one child stream in [`RngStream::par_map`].
pub const CHUNK: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Derived stream for sub-task `index`; distinct indices give distinct streams.
    pub fn child(&self, index: u64) -> RngStream {
        RngStream {
            seed: self.seed,
            stream_id: splitmix64(self.stream_id ^ splitmix64(index.wrapping_add(0x632b_e59b_d9b4_e019))),
        }
    }

    /// Runs `f` once per sample, in parallel over chunks, returning outputs in sample order.
    pub fn par_map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&mut ChaCha8Rng) -> T + Sync,
    {
        let chunks = n.div_ceil(CHUNK);
        let parts: Vec<Vec<T>> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut rng = self.child(c as u64).rng();
                let len = CHUNK.min(n - c * CHUNK);
                (0..len).map(|_| f(&mut rng)).collect()
            })
            .collect();
        parts.into_iter().flatten().collect()
    }

    /// Like [`par_map`](Self::par_map) but stops at the first error.
    pub fn try_par_map<T, E, F>(&self, n: usize, f: F) -> Result<Vec<T>, E>
    where
        T: Send,
        E: Send,
        F: Fn(&mut ChaCha8Rng) -> Result<T, E> + Sync,
    {
        let chunks = n.div_ceil(CHUNK);
        let parts: Result<Vec<Vec<T>>, E> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut rng = self.child(c as u64).rng();
                let len = CHUNK.min(n - c * CHUNK);
                (0..len).map(|_| f(&mut rng)).collect()
            })
            .collect();
        Ok(parts?.into_iter().flatten().collect())
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
