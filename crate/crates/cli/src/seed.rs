//! Stateless per-trial seed derivation.

use mts_core::fnv1a64;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// One round of the SplitMix64 output function. It is a bijection on `u64`.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `trial` on instance `instance_id`.
///
/// The instance stream is `splitmix64(master ^ fnv1a64(id))`; trial `j` of
/// that stream is `splitmix64(stream + j * GOLDEN)`. Both steps are
/// bijections, so for a fixed instance distinct trials get distinct seeds
/// and changing the master seed changes every seed of the instance.
pub fn derive_trial_seed(master: u64, instance_id: &str, trial: u64) -> u64 {
    let stream = splitmix64(master ^ fnv1a64(instance_id.as_bytes()));
    splitmix64(stream.wrapping_add(trial.wrapping_mul(GOLDEN)))
}
