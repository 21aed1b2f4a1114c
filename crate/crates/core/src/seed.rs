//! Deterministic seed splitting.
//!
//! Every stochastic stream in a run is derived from the master seed and a
//! tuple of indices, so collection order and worker count never change
//! results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type RunRng = ChaCha8Rng;

/// Domain tags keep streams for different purposes apart.
pub mod stream {
    pub const RANDOM_COLLECT: u64 = 1;
    pub const PROPOSER_COLLECT: u64 = 2;
    pub const PREDICTOR_INIT: u64 = 3;
    pub const PREDICTOR_TRAIN: u64 = 4;
    pub const PROPOSER_INIT: u64 = 5;
    pub const PROPOSER_TRAIN: u64 = 6;
    pub const EVAL: u64 = 7;
    pub const SPLIT: u64 = 8;
    pub const REACH: u64 = 9;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// `hash(master, parts...)`.
pub fn derive(master: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(splitmix64(master), |acc, &p| {
        splitmix64(acc ^ splitmix64(p))
    })
}

pub fn rng(master: u64, parts: &[u64]) -> RunRng {
    RunRng::seed_from_u64(derive(master, parts))
}

/// Uniform in `[0, 1)` from a hash, used for stable record-level decisions.
pub fn unit_hash(master: u64, parts: &[u64]) -> f64 {
    (derive(master, parts) >> 11) as f64 / (1u64 << 53) as f64
}
