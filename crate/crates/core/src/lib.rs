//! Simulation kernel for nonlocal entanglement concentration driven by a
//! cross-Kerr polarization parity check.
//!
//! Everything here is pure and allocation-only: exact pure-state algebra over
//! polarization photons with integer probe-phase tags ([`qstate`]), the wave
//! plates and detector sign rule ([`optics`]), the ideal parity QND
//! ([`qnd`]), the concentration rounds themselves ([`protocol`]), closed-form
//! success probabilities and yields ([`analytics`]) and seeded Monte Carlo
//! estimation ([`montecarlo`]).
//!
//! IO, report formats and the command line live in the `kerr-ecp` crate.

#![no_std]

extern crate alloc;

pub mod analytics;
mod error;
pub mod montecarlo;
pub mod optics;
pub mod outcomes;
pub mod protocol;
pub mod qnd;
pub mod qstate;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Normalization tolerance for state and source invariants.
pub const EPS_NORM: f64 = 1e-9;

/// Tolerance for exact-math assertions (unitarity, Born completeness, fidelity).
pub const EPS_EXACT: f64 = 1e-12;

/// Branches whose amplitude magnitude falls below this are dropped.
pub const PRUNE_THRESHOLD: f64 = 1e-15;
