//! Seed derivation for independent random streams.
//!
//! Every stochastic stage (edges, features, splits, init, per-epoch dropout,
//! pair sampling) gets its own stream derived from a base seed and a fixed
//! tag, so stages stay independent and reproducible regardless of call order.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags for [`derive_seed`]. Fixed for the life of the file formats.
pub mod stream {
    pub const EDGES: u64 = 0x01;
    pub const FEATURES: u64 = 0x02;
    pub const SPLIT: u64 = 0x03;
    pub const INIT: u64 = 0x04;
    pub const DROPOUT: u64 = 0x05;
    pub const PAIR_SAMPLING: u64 = 0x06;
    pub const TRAIN: u64 = 0x07;
}

/// SplitMix64 finalizer; decorrelates (seed, tag) pairs.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

pub fn derive_seed(base: u64, tag: u64) -> u64 {
    splitmix64(base ^ splitmix64(tag))
}

/// The one RNG used everywhere; ChaCha8 keyed by a 64-bit seed.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
