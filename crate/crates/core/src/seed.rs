//! Deterministic seed derivation.
//!
//! Every random stream in the simulator (frame bits, channel noise, probe
//! windows) is keyed by a base seed plus a path of indices, so any frame can
//! be regenerated in isolation and parallel execution order never matters.

use rand::SeedableRng;
use rand_pcg::Pcg64Mcg;

/// Stream tags used as the last element of a derivation path.
pub const STREAM_BITS: u64 = 0xB175;
pub const STREAM_NOISE: u64 = 0x4015E;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds `path` into `base`, producing a well-mixed child seed.
pub fn derive(base: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(base), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn rng(seed: u64) -> Pcg64Mcg {
    Pcg64Mcg::seed_from_u64(seed)
}
