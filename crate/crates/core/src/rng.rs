//! Seeded random streams.
//!
//! Every stochastic routine takes an explicit generator or seed. Independent
//! streams (per trial, per evaluated distribution) are derived by mixing the
//! base seed with a stream key, so results do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used throughout the crate.
pub type Rng = ChaCha8Rng;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for an independent stream identified by `key` under `seed`.
#[inline]
pub fn derive_seed(seed: u64, key: u64) -> u64 {
    mix64(mix64(seed) ^ key)
}

pub fn seeded(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

pub fn stream(seed: u64, key: u64) -> Rng {
    seeded(derive_seed(seed, key))
}
