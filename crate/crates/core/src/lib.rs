//! Design and characterization calculations for flip-chip superconducting
//! qubit devices: transmon energetics, capacitance-network couplings and
//! Purcell limits, multi-mode spectra, resonator fits, randomized
//! benchmarking and fabrication statistics.

// `!(x > 0.0)` is used on purpose so that NaN fails positivity checks
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod capnet;
pub mod charstats;
pub mod constants;
pub mod datasets;
pub mod error;
pub mod lsq;
#[cfg(test)]
mod properties;
pub mod rb;
pub mod reproduce;
pub mod resonfit;
pub mod serde_inf;
pub mod spectrum;
pub mod stats;
pub mod transmon;

pub use error::{Error, Result};
