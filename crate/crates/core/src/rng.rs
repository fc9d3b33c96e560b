//! Seeded random streams.
//!
//! Every stochastic routine takes a single `master_seed`. Independent work
//! items (bootstrap replicas, scenario paths) draw from their own ChaCha
//! stream selected by an integer counter, so results do not depend on the
//! order or thread in which items are evaluated.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type StreamRng = ChaCha8Rng;

/// Generator for work item `stream` under `master_seed`.
pub fn stream_rng(master_seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

/// Source of i.i.d. zero-mean, unit-variance shocks.
pub trait NoiseSource {
    fn next_shock(&mut self) -> f64;
}

/// Standard Gaussian shocks.
#[derive(Debug, Clone)]
pub struct GaussianNoise<R> {
    rng: R,
}

impl<R: Rng> GaussianNoise<R> {
    pub fn new(rng: R) -> Self {
        GaussianNoise { rng }
    }
}

impl<R: Rng> NoiseSource for GaussianNoise<R> {
    #[inline]
    fn next_shock(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }
}

/// Replays a fixed sequence of shocks, cycling when exhausted. Handy for
/// injecting non-Gaussian or deterministic increments.
#[derive(Debug, Clone)]
pub struct ReplayNoise<'a> {
    shocks: &'a [f64],
    pos: usize,
}

impl<'a> ReplayNoise<'a> {
    pub fn new(shocks: &'a [f64]) -> Self {
        assert!(!shocks.is_empty(), "replay noise needs at least one shock");
        ReplayNoise { shocks, pos: 0 }
    }
}

impl NoiseSource for ReplayNoise<'_> {
    fn next_shock(&mut self) -> f64 {
        let v = self.shocks[self.pos];
        self.pos = (self.pos + 1) % self.shocks.len();
        v
    }
}

/// Shocks that are always zero.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroNoise;

impl NoiseSource for ZeroNoise {
    fn next_shock(&mut self) -> f64 {
        0.0
    }
}
