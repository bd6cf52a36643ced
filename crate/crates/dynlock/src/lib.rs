//! Dynamic spin locking of interacting spin-1/2 clusters.
//!
//! The crate simulates dense 2^N spin ensembles under periodic pulse driving at
//! arbitrary frequency offset and extracts the effective locking field, the
//! offset-dressed dipolar Hamiltonian and the spectral signatures that follow
//! from them. A pulse-sequence search layer sits on top.
//!
//! Internal units are rad/s and seconds. Anything read from or written to a
//! file is in Hz.

pub mod analysis;
pub mod cli;
pub mod effective;
pub mod engine;
mod error;
pub mod search;
pub mod sequence;
pub mod spinops;

pub use error::{Error, Result};

/// Convert a frequency in Hz to angular frequency in rad/s.
pub fn hz_to_rad(nu: f64) -> f64 {
    2.0 * std::f64::consts::PI * nu
}

/// Convert an angular frequency in rad/s to Hz.
pub fn rad_to_hz(omega: f64) -> f64 {
    omega / (2.0 * std::f64::consts::PI)
}
