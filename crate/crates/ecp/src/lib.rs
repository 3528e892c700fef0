//! Report formats, a parallel trial executor and the verification suite for
//! [`kerr_ecp_core`], plus the `kerr-ecp` command-line driver.

mod error;
mod executor;
pub mod format;
pub mod verify;

pub use error::{Error, Result};
pub use executor::Parallel;

/// Seed used by every command when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 42;
