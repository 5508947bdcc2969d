//! Reproducible random streams.
//!
//! Every trajectory draws from its own ChaCha8 stream selected by
//! `(master seed, trajectory index)`, so ensemble results do not depend on
//! how trajectories are scheduled across workers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type StreamRng = ChaCha8Rng;

/// The random stream for trajectory `index` under `seed`.
pub fn stream(seed: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Brownian increments `sqrt(dt) * N(0, 1)` drawn from one stream.
#[derive(Debug, Clone)]
pub struct Increments {
    rng: StreamRng,
    scale: f64,
}

impl Increments {
    pub fn new(rng: StreamRng, dt: f64) -> Self {
        Self {
            rng,
            scale: dt.sqrt(),
        }
    }

    pub fn for_trajectory(seed: u64, index: u64, dt: f64) -> Self {
        Self::new(stream(seed, index), dt)
    }

    #[inline]
    pub fn next_increment(&mut self) -> f64 {
        let z: f64 = self.rng.sample(StandardNormal);
        self.scale * z
    }
}

impl Iterator for Increments {
    type Item = f64;

    #[inline]
    fn next(&mut self) -> Option<f64> {
        Some(self.next_increment())
    }
}

/// Uniform draw on the open interval (0, 1).
#[inline]
pub(crate) fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}
