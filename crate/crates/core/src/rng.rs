//! Seeded randomness. Every random draw in the crate comes from a
//! [`ChaCha8Rng`] derived from one root seed, so identical seeds give
//! identical runs on every platform.

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng;

/// 64-bit FNV-1a.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Derives the seed of a named substream, e.g. `substream(seed, "kshot:K=10:rep=3")`.
pub fn substream(seed: u64, name: &str) -> u64 {
    seed ^ fnv1a(name.as_bytes())
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn named_rng(seed: u64, name: &str) -> ChaCha8Rng {
    rng(substream(seed, name))
}
