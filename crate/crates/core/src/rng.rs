//! Seeded, splittable random streams.
//!
//! A stream is identified by `(seed, stream_id)` and backed by ChaCha8, whose
//! native 64-bit stream selector gives independent sequences for distinct ids.
//! Replicate `r` of an experiment owns a block of four stream ids so that its
//! draws never depend on how replicates are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A uniform draw in `[0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct UniformDraw(f64);

impl UniformDraw {
    pub fn new(u: f64) -> Option<Self> {
        (0.0..1.0).contains(&u).then_some(UniformDraw(u))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

#[derive(Clone, Debug)]
pub struct RandomStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

const TWO_POW_53: f64 = 9_007_199_254_740_992.0;

impl RandomStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        RandomStream { seed, stream_id, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform on `[0, 1)` with 53 bits of resolution.
    pub fn uniform(&mut self) -> UniformDraw {
        let bits = self.rng.random::<u64>() >> 11;
        UniformDraw(bits as f64 / TWO_POW_53)
    }

    /// Uniform on the open interval `(0, 1)`, for inverting unbounded CDFs.
    pub fn uniform_open(&mut self) -> f64 {
        let bits = self.rng.random::<u64>() >> 11;
        (bits as f64 + 0.5) / TWO_POW_53
    }
}

/// Streams owned by one replicate of a Monte Carlo experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReplicateStreams {
    pub seed: u64,
    pub replicate: u64,
}

impl ReplicateStreams {
    pub fn new(seed: u64, replicate: u64) -> Self {
        ReplicateStreams { seed, replicate }
    }

    /// Draws consumed by the program itself.
    pub fn sampling(&self) -> RandomStream {
        RandomStream::new(self.seed, self.replicate.wrapping_mul(4))
    }

    /// Draws consumed by perturbation pruning; kept apart from `sampling` so
    /// the primal computation never sees them.
    pub fn pruning(&self) -> RandomStream {
        RandomStream::new(self.seed, self.replicate.wrapping_mul(4) + 1)
    }

    /// A second, independent sampling stream (uncoupled finite differences).
    pub fn independent(&self) -> RandomStream {
        RandomStream::new(self.seed, self.replicate.wrapping_mul(4) + 2)
    }
}
