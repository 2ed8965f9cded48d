//! Counter-based random streams.
//!
//! Every random quantity in the crate is a pure function of a 64-bit key, so
//! results do not depend on evaluation order or on the number of worker
//! threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const DERIVE_INIT: u64 = 0x6A09_E667_F3BC_C909;

/// SplitMix64 finalizer: a bijective 64-bit avalanche mixer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a list of integers into a single seed.
///
/// For a fixed prefix the last component maps bijectively onto the output, so
/// e.g. `derive_seed(&[master, n, trial])` never collides across trials of the
/// same `n`.
pub fn derive_seed(parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(DERIVE_INIT, |acc, &p| mix64(acc ^ mix64(p)))
}

/// Uniform draw in [0, 1) from the top 53 bits of a word.
#[inline]
pub fn unit_f64(word: u64) -> f64 {
    (word >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// The `index`-th word of the stream keyed by `key`.
#[inline]
pub fn stream_word(key: u64, index: u64) -> u64 {
    mix64(mix64(key) ^ index.wrapping_mul(GOLDEN_GAMMA))
}

/// Bernoulli(`p`) draw at position `index` of the stream keyed by `key`.
///
/// `p = 0` never fires and `p = 1` always fires.
#[inline]
pub fn bernoulli(key: u64, index: u64, p: f64) -> bool {
    unit_f64(stream_word(key, index)) < p
}

/// A conventional generator for sequential sampling (random geodesics and
/// the like), seeded from a derived key.
pub fn seeded_rng(key: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(key)
}
