//! Seed derivation.
//!
//! Every random stream in an experiment is derived from one master seed by
//! mixing in a stream tag and indices, so that streams never overlap and a
//! sweep point can be reproduced in isolation from its recorded seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random stream used throughout the crate.
pub type Rng = ChaCha8Rng;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a parent seed and a sequence of indices.
pub fn derive(parent: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(mix64(parent), |acc, &p| mix64(acc ^ mix64(p)))
}

/// Stream tags, so that e.g. the transmission matrix and the node layout of
/// the same device never share a seed.
pub mod tag {
    pub const TRANSMISSION: u64 = 1;
    pub const COUPLING: u64 = 2;
    pub const FREE_RUNNING: u64 = 3;
    pub const LAYOUT: u64 = 4;
    pub const SEQUENCE: u64 = 5;
    pub const NOISE: u64 = 6;
    pub const TRAINING: u64 = 7;
    pub const TEST_SEQUENCE: u64 = 8;
    pub const DEVICE: u64 = 9;
    pub const POINT: u64 = 10;
}

pub fn rng(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}
