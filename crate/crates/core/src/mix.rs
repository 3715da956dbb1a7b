//! 64-bit mixing shared by the deterministic noise, routing and ownership hashes.

/// Golden-ratio increment used by SplitMix64.
pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// The SplitMix64 output finalizer (Stafford variant 13).
#[inline]
pub fn finalize(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds `values` into a single well-mixed word, starting from `seed`.
pub fn hash_words(seed: u64, values: &[u64]) -> u64 {
    values.iter().fold(finalize(seed), |acc, &v| {
        finalize(acc.wrapping_add(GOLDEN_GAMMA) ^ v)
    })
}

/// Maps a draw onto (0, 1], never returning zero.
#[inline]
pub fn open_unit(bits: u64) -> f64 {
    ((bits >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}
