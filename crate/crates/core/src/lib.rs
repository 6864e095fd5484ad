//! Photon-level BB84 simulation over an attenuating free-space channel.
//!
//! The crate pairs a window-by-window Monte Carlo of a polarization-encoded
//! BB84 bench (weak laser source, half-wave plates, multipath gas cell, PBS
//! and two SPADs) with a closed-form link budget, so that simulated QBER can
//! be checked against the analytic expectation for any channel loss.
//!
//! - [`optics`]: plane-polarization states, half-wave plates, PBS projection
//! - [`channel`]: Beer–Lambert transmittance, atmosphere profiles, gas cell
//! - [`detector`]: SPAD click model per dead-time window
//! - [`protocol`]: the BB84 engine, sifting and QBER estimation
//! - [`budget`]: analytic QBER, calibration, security verdicts, presets
//! - [`cli`]: scenario files, reports and plot data behind the `bb84-atmo` binary

pub mod budget;
pub mod channel;
pub mod cli;
pub mod detector;
pub mod error;
pub mod optics;
pub mod protocol;

pub use error::{Error, Result};
