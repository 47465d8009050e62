//! Deterministic RNG stream derivation.
//!
//! Every Monte Carlo loop in this crate draws from a stream derived as
//! `substream(seed, &[tag0, tag1, ...])`. The derivation is a SplitMix64
//! chain over the seed and tags, feeding a ChaCha8 stream cipher. Because a
//! trial's stream depends only on `(seed, tags)` and never on scheduling,
//! results are identical for any worker count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The RNG used throughout the crate.
pub type SimRng = ChaCha8Rng;

/// One SplitMix64 step.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a 64-bit sub-seed from a master seed and a tag path.
pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    let mut state = seed;
    let mut out = splitmix64(&mut state);
    for &t in tags {
        state ^= t.wrapping_mul(0xD6E8_FEB8_6659_FD93);
        out ^= splitmix64(&mut state);
    }
    out
}

/// Builds an independent stream for the given tag path.
///
/// Tags typically identify (experiment, grid point, strategy, trial index).
pub fn substream(seed: u64, tags: &[u64]) -> SimRng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, tags))
}
