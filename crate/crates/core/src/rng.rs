//! Seeded pseudo-random generation.
//!
//! Every random draw in the crate goes through [`Rng`], a thin wrapper over
//! xoshiro256++ (Blackman & Vigna). The generator is fixed; it must not be
//! swapped for a platform default because emitted metrics are expected to be
//! bit-identical across machines for a given seed.
//!
//! Independent streams are derived from `(master seed, stream id)` by mixing
//! both through the SplitMix64 finalizer, so two runs that share a master seed
//! share e.g. their initialization stream but never alias each other's
//! dropout or optimizer streams.

use rand::seq::SliceRandom;
use rand::{Rng as _, RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

/// Well-known stream ids used by the harness.
pub mod streams {
    pub const INIT: u64 = 1;
    pub const SPLIT: u64 = 2;
    pub const SUBSET: u64 = 3;
    pub const DROPOUT: u64 = 4;
    pub const OPTIMIZER: u64 = 5;
    pub const SYNTH: u64 = 6;
    /// Epoch `k` shuffles with stream `BATCHES + k`.
    pub const BATCHES: u64 = 1 << 32;
}

#[derive(Debug, Clone)]
pub struct Rng {
    inner: Xoshiro256PlusPlus,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl Rng {
    pub fn from_seed(seed: u64) -> Self {
        Rng {
            inner: Xoshiro256PlusPlus::seed_from_u64(seed),
        }
    }

    /// Generator for stream `stream` of master seed `seed`.
    pub fn derive(seed: u64, stream: u64) -> Self {
        Self::from_seed(splitmix64(splitmix64(seed) ^ stream.wrapping_mul(0xD6E8_FEB8_6659_FD93)))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform draw from `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }

    /// Uniform draw from `[low, high)`; returns `low` when the bounds coincide.
    pub fn uniform(&mut self, low: f64, high: f64) -> f64 {
        low + (high - low) * self.next_f64()
    }

    /// Standard normal draw (Box-Muller, one value per call).
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.inner.gen_range(0..n)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }

    /// Fisher-Yates shuffle of a slice.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        items.shuffle(&mut self.inner);
    }
}

/// A uniformly random permutation of `0..n`.
pub fn shuffle_indices(n: usize, rng: &mut Rng) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut idx);
    idx
}
