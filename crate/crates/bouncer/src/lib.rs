//! Configuration, persistence and orchestration for `fermi-core`: single runs,
//! parameter sweeps and re-analysis of written outputs.
//!
//! Every run directory holds the resolved `config.toml`, its artifacts and a
//! `manifest.toml` with their checksums.

pub mod analysis;
pub mod analyze;
pub mod config;
mod error;
pub mod fft;
pub mod formats;
pub mod manifest;
pub mod run;
pub mod sweep;

pub use config::{load_config, parse_config, RunConfig, OUTPUT_ROOT_ENV};
pub use error::{BouncerError, Result};
pub use fft::PlannedFft;
pub use manifest::{RunManifest, RunStatus};
pub use run::{run, run_in, RunOptions, RunOutcome};
pub use sweep::{sweep, SweepResult};
