//! Counter-based random streams.
//!
//! Every random quantity in the crate is a pure function of a 64-bit seed and
//! an integer key, so fields can be regenerated cell by cell and trials can be
//! scheduled on any number of workers without changing a single bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// Finalizer of SplitMix64; a bijection on `u64` with full avalanche.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hash of `(seed, key)` used to derive independent sub-seeds.
#[inline]
pub fn derive_seed(seed: u64, key: u64) -> u64 {
    mix64(mix64(seed ^ GOLDEN).wrapping_add(key.wrapping_mul(GOLDEN)) ^ 0x5851_F42D_4C95_7F2D)
}

/// Per-trial seed, `hash(master_seed, trial_index)`.
#[inline]
pub fn trial_seed(master: u64, trial: u64) -> u64 {
    derive_seed(master, trial ^ 0xA076_1D64_78BD_642F)
}

/// Raw 64 random bits keyed by `(seed, row, col)`.
#[inline]
pub fn cell_bits(seed: u64, row: usize, col: usize) -> u64 {
    let key = ((row as u64) << 32) ^ (col as u64);
    let s = mix64(seed.wrapping_add(GOLDEN));
    mix64(mix64(s ^ key.wrapping_mul(0xD6E8_FEB8_6659_FD93)).wrapping_add(s))
}

/// Uniform draw in the half-open interval (0, 1].
#[inline]
pub fn unit_open0(bits: u64) -> f64 {
    ((bits >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Exp(1) draw for cell `(row, col)` under `seed`, by inversion `-ln U`.
#[inline]
pub fn cell_exp(seed: u64, row: usize, col: usize) -> f64 {
    -unit_open0(cell_bits(seed, row, col)).ln()
}

/// A conventional sequential generator for samplers that consume a variable
/// number of draws (matrix entries, path shuffles).
pub fn stream(seed: u64, purpose: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, purpose))
}
