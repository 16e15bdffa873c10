//! Dynamics of cold atoms bouncing on a sinusoidally modulated evanescent-wave
//! mirror under gravity.
//!
//! Everything here works in the dimensionless variables produced by
//! [`scaling::to_dimensionless`]: position `z`, momentum `p`, time `t` and the
//! four control parameters `V0`, `kappa`, `lambda` and `kbar`.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, configuration,
//! the command line and parallel execution live in the `fermi-bouncer` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod classical;
pub mod diagnostics;
mod error;
pub(crate) mod math;
pub mod quantum;
pub mod scaling;
pub mod windows;

pub use error::{ClassicalError, DiagnosticsError, Error, ParamError, QuantumError, WindowError};
pub use scaling::{LabAnchor, LabParams, ScaledParams};
pub use windows::{AccelWindow, HalfIndex};
