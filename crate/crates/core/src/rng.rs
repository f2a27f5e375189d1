//! Seed management: one global seed, independent named sub-streams.
//!
//! Every source of randomness in the pipeline (embedding init, split
//! sampling, weight init, noise, ...) draws from its own stream so that
//! changing one stage's consumption pattern cannot perturb another's.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Derive a reproducible RNG for `stream` from the global `seed`.
pub fn stream_rng(seed: u64, stream: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ fnv1a(stream.as_bytes())))
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}
