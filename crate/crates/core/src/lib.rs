//! Network-wide beam alignment for sub-THz device-to-device networks.
//!
//! The crate is organised bottom-up:
//!
//! - [`channel`]: image-source multipath generation, pulse-shaped discrete
//!   channels, frequency-domain and beamspace representations.
//! - [`pilots`]: constant-envelope pilots with comb-shaped spectra.
//! - [`sensing`]: random unit-circle beam weights, Kronecker sampling
//!   matrices, measurement synthesis and the block-ISTA MMV solver.
//! - [`baseline`]: one-sided random probing with noncoherent energy
//!   detection and rank-1 pair reconstruction.
//! - [`netsched`]: logarithmic-round transmitter/receiver partitions and the
//!   round orchestration that fills an [`netsched::AlignmentTable`].
//! - [`comm`]: flat-top communication tapers, SINR / sum spectral
//!   efficiency, matched-filter bound and frequency flatness.
//! - [`harness`]: experiment configuration, Monte-Carlo sweeps, aggregation
//!   and CSV export.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baseline;
pub mod channel;
pub mod codebook;
pub mod comm;
pub mod dft;
pub mod error;
pub mod export;
pub mod harness;
pub mod netsched;
pub mod pilots;
pub mod seed;
pub mod sensing;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
