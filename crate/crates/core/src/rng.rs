//! Seeded random number generation.
//!
//! All randomness comes from ChaCha8, a portable counter-based generator
//! whose output stream is fixed by its seed on every platform. Sub-streams
//! (one per page, per permutation draw, per chain) derive their seed from a
//! global seed and a stable label, so the order in which parallel workers
//! consume them never changes the result.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// 64-bit FNV-1a over the label bytes.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for the sub-stream named `label` under `seed`.
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    mix(seed ^ mix(fnv1a(label.as_bytes())))
}

/// Seed for the `index`-th sub-stream under `seed`.
pub fn derive_indexed(seed: u64, index: u64) -> u64 {
    mix(seed.wrapping_add(mix(index.wrapping_add(0x9e37_79b9_7f4a_7c15))))
}
