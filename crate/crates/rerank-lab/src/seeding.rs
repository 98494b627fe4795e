//! Deterministic seed derivation.
//!
//! Every random draw in the crate flows from one root seed through these
//! mixers, so results are reproducible across runs, platforms, and thread
//! schedules. std's hasher is not stable across releases, hence FNV here.

/// FNV-1a 64-bit hash.
pub fn fnv1a64(s: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in s.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// SplitMix64 finalizer; a bijection on u64.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Derives a per-(key, index) seed from a root seed. Distinct indices give
/// distinct seeds because splitmix64 is injective.
pub fn derive_seed(root: u64, key: &str, index: u64) -> u64 {
    splitmix64(splitmix64(root ^ fnv1a64(key)).wrapping_add(index))
}
