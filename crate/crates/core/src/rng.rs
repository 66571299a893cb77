//! Seeded, counter-based random streams.
//!
//! Each stochastic subsystem draws from its own ChaCha stream keyed by
//! `(seed, stream_id)`, so the order in which subsystems are evaluated never
//! changes the values another subsystem sees.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Well-known stream ids.
pub mod streams {
    pub const SENSING: u64 = 1;
    pub const MAC: u64 = 2;
    pub const CHANNEL: u64 = 3;
    pub const SCENARIO: u64 = 4;
}

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        Self { seed, stream_id, inner }
    }

    /// Positions the stream at an absolute draw index (counted in 32-bit words).
    pub fn at(seed: u64, stream_id: u64, draw_index: u128) -> Self {
        let mut s = Self::new(seed, stream_id);
        s.inner.set_word_pos(draw_index);
        s
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn draw_index(&self) -> u128 {
        self.inner.get_word_pos()
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Uniform integer in `[0, n)`. `n` must be positive.
    pub fn below(&mut self, n: u64) -> u64 {
        self.inner.random_range(0..n)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        p > 0.0 && self.uniform() < p
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }
}
