use thiserror::Error;

use crate::classical::ClassicalState;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("parameter `{name}` must be {requirement}, got {value}")]
    Invalid { name: &'static str, requirement: &'static str, value: f64 },
    #[error("anchor frequency {given} disagrees with the frequency {implied} implied by kbar")]
    InconsistentAnchor { given: f64, implied: f64 },
}

impl ParamError {
    pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<(), ParamError> {
        if value > 0.0 && value.is_finite() {
            Ok(())
        } else {
            Err(ParamError::Invalid { name, requirement: "finite and > 0", value })
        }
    }

    pub(crate) fn check_non_negative(name: &'static str, value: f64) -> Result<(), ParamError> {
        if value >= 0.0 && value.is_finite() {
            Ok(())
        } else {
            Err(ParamError::Invalid { name, requirement: "finite and >= 0", value })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WindowError {
    #[error("window index {0} is not a non-negative multiple of 1/2")]
    InvalidIndex(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassicalError {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error("no bounce found within {horizon} time units of t = {t}")]
    NoBounce { t: f64, horizon: f64 },
    #[error("state at t = {t} starts below the mirror (depth {depth})")]
    BelowMirror { t: f64, depth: f64 },
    #[error("integration diverged after t = {}", last_good.t)]
    Diverged { last_good: ClassicalState },
    #[error("rejected {rejected} of {attempts} initial draws below the mirror (limit {limit})")]
    Rejection { rejected: u64, attempts: u64, limit: f64 },
    #[error("invalid schedule: {0}")]
    Schedule(&'static str),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuantumError {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error("grid too small: {0}")]
    GridTooSmall(alloc::string::String),
    #[error("invalid grid: {0}")]
    InvalidGrid(&'static str),
    #[error("propagation diverged at t = {t}")]
    Diverged { t: f64 },
    #[error("{fraction:e} of the probability reached the outer momentum band at t = {t}")]
    MomentumOverflow { t: f64, fraction: f64 },
    #[error("{fraction:e} of the probability reached the top of the box at t = {t}")]
    BoxOverflow { t: f64, fraction: f64 },
    #[error("observer time {time} is not on the step grid")]
    Schedule { time: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiagnosticsError {
    #[error("no samples fell inside the histogram axis")]
    EmptyHistogram,
    #[error("invalid axis: {0}")]
    InvalidAxis(&'static str),
    #[error("fit domain: {0}")]
    FitDomain(&'static str),
    #[error("series length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error(transparent)]
    Classical(#[from] ClassicalError),
}

/// Union of the per-module errors.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Window(#[from] WindowError),
    #[error(transparent)]
    Classical(#[from] ClassicalError),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
}
