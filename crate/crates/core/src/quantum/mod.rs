//! Split-operator propagation of the scaled Schrödinger equation
//!
//! ```text
//! i kbar ∂ψ/∂t = [-(kbar²/2) ∂²/∂z² + z + V0 exp(-κ(z - λ sin t))] ψ
//! ```
//!
//! on a uniform periodic grid. The spectral transform is pluggable through
//! [`SpectralTransform`]; [`Radix2Fft`] is the portable implementation.

mod fft;
mod grid;
mod propagate;
mod state;

pub use fft::{Radix2Fft, SpectralTransform};
pub use grid::SpatialGrid;
pub use propagate::{
    convergence_ratio, propagate, propagate_into, select_step, Absorber, Schedule, SignalSeries, SplitOperator,
    StepProbe,
};
pub use state::{
    init_gaussian, momentum_marginal, momentum_marginal_from, position_marginal, Moments, WavepacketState,
};
