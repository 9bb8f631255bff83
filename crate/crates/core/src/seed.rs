//! Seed derivation: every random stream in an experiment comes from the
//! master seed, a purpose label and an index.

use crate::dataset::{fnv1a64, FNV_OFFSET};

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// splitmix64 output function; a bijection on `u64`.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// FNV-1a (64-bit) over `master` (little-endian bytes) followed by the
/// `purpose` bytes, plus `(index + 1) * golden gamma`, then [`mix64`].
///
/// For fixed `master` and `purpose` the map from `index` is injective.
pub fn derive_seed(master: u64, purpose: &str, index: u64) -> u64 {
    let h = fnv1a64(fnv1a64(FNV_OFFSET, &master.to_le_bytes()), purpose.as_bytes());
    mix64(h.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// FNV-1a (64-bit) of `bytes`; used for content-derived identifiers.
pub fn hash_bytes(bytes: &[u8]) -> u64 {
    fnv1a64(FNV_OFFSET, bytes)
}
