//! Seed derivation.
//!
//! Every random draw in the crate goes through a `ChaCha8Rng` seeded from a
//! 64-bit value. Replication `r` of an experiment with base seed `s` uses
//! `replication_seed(s, r)`, and each stage inside a replication uses
//! `stream_seed(rep_seed, Stream::…)`. Both are SplitMix64 finalizers over a
//! counter, so seeds are reproducible and independent of execution order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tags for derived seeds inside one replication.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Design = 1,
    Coefficients = 2,
    Responses = 3,
    Split = 4,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn replication_seed(base: u64, replication: u64) -> u64 {
    splitmix64(splitmix64(base) ^ replication.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

pub fn stream_seed(seed: u64, stream: Stream) -> u64 {
    splitmix64(seed ^ splitmix64(stream as u64))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
