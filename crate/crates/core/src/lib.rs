//! Simulation library for metrical task systems with predictions.
//!
//! Online algorithms that combine several predictors ([`combine`],
//! [`bandit`]), the unfair uniform-metric players they are built on
//! ([`unfair`]), exact offline benchmarks ([`benchmarks`]) and instance
//! generators and reductions ([`instances`]).

pub mod bandit;
pub mod benchmarks;
pub mod combine;
pub mod error;
pub mod instances;
pub mod io;
pub mod model;
pub mod unfair;

pub use error::{Error, Result};
pub use model::*;

/// 64-bit FNV-1a hash.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}
