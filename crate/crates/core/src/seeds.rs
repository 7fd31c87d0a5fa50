//! Seed derivation for independent, reproducible streams.
//!
//! Every worker owns a generator keyed by `(master seed, purpose, index)`, so
//! results never depend on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Name recorded in outputs for the simulation generator.
pub const SIMULATION_RNG: &str = "chacha8-splitmix64-v1";

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a master seed with a purpose tag and an index.
pub fn derive_seed(master: u64, purpose: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ purpose) ^ index)
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Purpose tags. Arbitrary but fixed.
pub mod purpose {
    pub const STREAM: u64 = 0x5354_5245_414d;
    pub const T1_SERIES: u64 = 0x5431_5345_52;
    pub const TUNEUP: u64 = 0x5455_4e45;
    pub const BENCHMARK: u64 = 0x4352_42;
    pub const LANDSCAPE: u64 = 0x4c41_4e44;
    pub const SNR: u64 = 0x534e_52;
    pub const SEQUENCES: u64 = 0x5345_5153;
}
