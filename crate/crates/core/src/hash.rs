//! Seedable 64-bit hashing shared by MinHash, feature bucketing, and
//! per-run seed derivation.
//!
//! The std hasher is keyed randomly per process, so everything here is
//! hand-rolled: FNV-1a for byte streams and the SplitMix64 finalizer as
//! a cheap invertible mixer. Outputs are stable across platforms and
//! releases, which the pipeline's determinism contract depends on.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// FNV-1a over a byte slice.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// SplitMix64 finalizer: bijective avalanche mix of a 64-bit word.
pub fn mix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// One of `k` independent hash functions: mixes a base hash with the
/// i-th seed of a SplitMix64 stream started at `seed`.
pub fn seeded_hash(base: u64, seed: u64, index: u64) -> u64 {
    mix64(base ^ mix64(seed.wrapping_add(index.wrapping_mul(0x9e37_79b9_7f4a_7c15))))
}

/// Derives a child seed from a base seed and a string label. Used for
/// per-run and per-tree seeds so that independent units of work do not
/// share RNG streams.
pub fn derive_seed(base: u64, label: &str) -> u64 {
    mix64(base ^ fnv1a(label.as_bytes()))
}

/// Derives a child seed from a base seed, a string label, and an index.
pub fn derive_seed_indexed(base: u64, label: &str, index: u64) -> u64 {
    mix64(derive_seed(base, label) ^ mix64(index))
}
