//! Seed derivation and hashed sign streams.
//!
//! Every random quantity in the crate is a pure function of a 64-bit seed, so
//! identical configurations reproduce identical draws regardless of thread
//! scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used everywhere a `Rng` is needed.
pub type SeededRng = ChaCha8Rng;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes two words into one; used for per-trial seeds `hash64(base, trial)`.
pub fn hash64(a: u64, b: u64) -> u64 {
    splitmix64(splitmix64(a) ^ b.rotate_left(17) ^ 0x2545_F491_4F6C_DD1D)
}

/// Deterministic hash of a seed and a pair of coordinates.
#[inline]
pub fn hash3(seed: u64, a: u64, b: u64) -> u64 {
    splitmix64(hash64(seed, a) ^ splitmix64(b.wrapping_add(0x632B_E59B_D9B4_E019)))
}

/// A ±1 value keyed by `(seed, a, b)`.
#[inline]
pub fn hashed_sign(seed: u64, a: u64, b: u64) -> f64 {
    if hash3(seed, a, b) >> 63 == 0 {
        1.0
    } else {
        -1.0
    }
}

pub fn rng_from_seed(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// RNG for trial `t` of an experiment seeded with `base`.
pub fn trial_rng(base: u64, trial: u64) -> SeededRng {
    rng_from_seed(hash64(base, trial))
}
