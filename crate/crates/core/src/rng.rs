//! Seed derivation.
//!
//! Every random stream in the toolkit is a ChaCha8 generator seeded from a
//! master seed mixed with a path of integers (record index, epoch, batch, ...).
//! Streams for distinct paths are independent, so work can be split across
//! threads without changing results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `parts` into `base`, one splitmix round per part.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(splitmix64(base), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn rng_from(base: u64, parts: &[u64]) -> Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, parts))
}
