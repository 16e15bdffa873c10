//! Classical trajectories above the modulated mirror.
//!
//! Two backends share one interface: [`hardwall`] treats the mirror as an
//! infinitely steep wall at `z = λ sin t` (the Fermi–Pustyl'nikov map), while
//! [`smooth`] integrates the exponential potential with a kick–drift–kick
//! scheme.

pub mod ensemble;
pub mod hardwall;
pub mod smooth;
mod tracker;

pub use ensemble::{
    propagate_ensemble, sample_gaussian_ensemble, uniform_times, Ensemble, EnsembleOutput, EnsembleReducer,
    EnsembleRun, GaussianSpec, MomentTrace, PhasePoint, Snapshot, TrajectoryRecord,
};
pub use hardwall::{bounce_map_step, find_bounce_time, Bounce, BounceConfig, HardWall};
pub use smooth::{integrate_smooth, SmoothConfig, SmoothEvent, SmoothIntegrator};
pub use tracker::{AccelCriterion, Backend, Tracker};

/// A point `(z, p)` of scaled phase space at scaled time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ClassicalState {
    pub z: f64,
    pub p: f64,
    pub t: f64,
}

impl ClassicalState {
    pub const fn new(z: f64, p: f64, t: f64) -> Self {
        ClassicalState { z, p, t }
    }

    /// Ballistic motion under unit gravity for a time `dt`.
    #[inline]
    pub fn free_flight(&self, dt: f64) -> Self {
        ClassicalState { z: self.z + self.p * dt - 0.5 * dt * dt, p: self.p - dt, t: self.t + dt }
    }

    /// Free-flight energy `p²/2 + z`, ignoring the mirror potential.
    #[inline]
    pub fn gravity_energy(&self) -> f64 {
        0.5 * self.p * self.p + self.z
    }

    pub fn is_finite(&self) -> bool {
        self.z.is_finite() && self.p.is_finite() && self.t.is_finite()
    }
}
