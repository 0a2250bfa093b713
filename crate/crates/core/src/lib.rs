//! Fock-basis simulation of long-range multiphoton entanglement distribution.
//!
//! Two two-mode squeezed-vacuum sources each keep a signal mode and send an
//! idler mode to a remote station, where the idlers interfere on a balanced
//! beam splitter followed by photon-number-resolving detectors. Conditioning
//! on the readout `(k, σ − k)` leaves the signal modes in a photon-number
//! entangled state. This crate computes those conditional states, their
//! logarithmic negativity and quantum Fisher information, and the associated
//! click probabilities and rates, under arbitrary loss configurations.
//!
//! Two independent routes are provided for most quantities: a sparse
//! density-operator simulation ([`protocol::simulate_pipeline`]) and the
//! closed forms in [`protocol`] and [`measures`]. They are cross-checked in
//! the test suites.

pub mod channels;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod fock;
pub mod kravchuk;
pub mod measures;
pub mod protocol;
mod special;

pub use error::{FocklineError, Result};

/// Double-precision complex scalar used throughout.
pub type C64 = num_complex::Complex64;
