use alloc::vec::Vec;

use crate::error::ClassicalError;
use crate::scaling::ScaledParams;

use super::hardwall::{BounceConfig, HardWall};
use super::smooth::{SmoothConfig, SmoothEvent, SmoothIntegrator};
use super::ClassicalState;

/// Which dynamics propagates a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Backend {
    HardWall(BounceConfig),
    Smooth(SmoothConfig),
}

impl Backend {
    pub fn hard_wall() -> Self {
        Backend::HardWall(BounceConfig::default())
    }

    pub fn smooth() -> Self {
        Backend::Smooth(SmoothConfig::default())
    }
}

/// When a trajectory counts as accelerating: each of the last `window`
/// bounce-to-bounce energy gains exceeds `threshold`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccelCriterion {
    pub window: usize,
    pub threshold: f64,
}

impl Default for AccelCriterion {
    fn default() -> Self {
        AccelCriterion { window: 10, threshold: 1e-9 }
    }
}

impl AccelCriterion {
    /// Whether the energy history ends in `window` consecutive gains.
    pub fn is_accelerating(&self, energies: &[f64]) -> bool {
        if self.window == 0 || energies.len() < self.window + 1 {
            return false;
        }
        energies[energies.len() - self.window - 1..].windows(2).all(|w| w[1] - w[0] > self.threshold)
    }

    /// Mean energy gain per bounce over the last `window` bounces (or fewer, if
    /// the history is shorter). Zero without any bounce.
    pub fn mean_gain(&self, energies: &[f64]) -> f64 {
        let n = energies.len();
        if n < 2 {
            return 0.0;
        }
        let span = self.window.max(1).min(n - 1);
        (energies[n - 1] - energies[n - 1 - span]) / span as f64
    }
}

/// A single trajectory with its bounce history.
///
/// `energies` starts with the initial free-flight energy; every later entry is
/// the free-flight energy after one bounce.
#[derive(Debug, Clone, PartialEq)]
pub struct Tracker {
    state: ClassicalState,
    /// Last post-bounce state for the hard wall, used to evaluate free flight exactly.
    anchor: ClassicalState,
    next_bounce: Option<(f64, ClassicalState)>,
    energies: Vec<f64>,
    bounce_times: Vec<f64>,
    /// Smooth backend: a bounce was seen and its apex energy is still to come.
    apex_pending: bool,
}

impl Tracker {
    pub fn new(initial: ClassicalState) -> Self {
        Tracker {
            state: initial,
            anchor: initial,
            next_bounce: None,
            energies: alloc::vec![initial.gravity_energy()],
            bounce_times: Vec::new(),
            apex_pending: false,
        }
    }

    pub fn state(&self) -> &ClassicalState {
        &self.state
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn bounce_times(&self) -> &[f64] {
        &self.bounce_times
    }

    /// Propagate to time `t` (which must not lie before the current time).
    pub fn advance_to(&mut self, t: f64, params: &ScaledParams, backend: &Backend) -> Result<(), ClassicalError> {
        if t < self.state.t {
            return Err(ClassicalError::Schedule("target time precedes current time"));
        }
        match backend {
            Backend::HardWall(config) => {
                let wall = HardWall::with_config(params.lambda, *config);
                loop {
                    let (t_hit, after) = match self.next_bounce {
                        Some(next) => next,
                        None => {
                            let b = wall.bounce(&self.anchor)?;
                            let next = (b.after.t, b.after);
                            self.next_bounce = Some(next);
                            next
                        }
                    };
                    if t_hit > t {
                        break;
                    }
                    self.anchor = after;
                    self.next_bounce = None;
                    self.energies.push(after.gravity_energy());
                    self.bounce_times.push(t_hit);
                }
                self.state = self.anchor.free_flight(t - self.anchor.t);
                Ok(())
            }
            Backend::Smooth(config) => {
                let integ = SmoothIntegrator::new(*params, *config);
                let energies = &mut self.energies;
                let bounce_times = &mut self.bounce_times;
                let pending = &mut self.apex_pending;
                self.state = integ.advance(&self.state, t, |event| match event {
                    SmoothEvent::Bounce { t } => {
                        bounce_times.push(t);
                        *pending = true;
                    }
                    SmoothEvent::Apex { energy, .. } => {
                        if *pending {
                            energies.push(energy);
                            *pending = false;
                        }
                    }
                })?;
                Ok(())
            }
        }
    }
}
