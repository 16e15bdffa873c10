//! Kick–drift–kick integration of the smooth exponential mirror.
//!
//! Each step freezes the time-dependent force at the step midpoint, so a step
//! is a composition of two momentum shears around a position shear and has a
//! unit Jacobian. Close to the wall the step is halved until
//! `|F| h² <= force_tol` holds at both ends of the drift. Far above the
//! mirror, where the wall force is below double-precision resolution of
//! gravity, whole runs of steps are replaced by the exact free flight they
//! reproduce.

use crate::error::ClassicalError;
use crate::scaling::ScaledParams;

use super::ClassicalState;

/// Wall force, relative to gravity, below which a step is pure free fall.
const NEGLIGIBLE_WALL: f64 = 1e-17;
/// Coordinates beyond this magnitude count as a diverged integration.
const STATE_LIMIT: f64 = 1e100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothConfig {
    /// Base step far from the mirror.
    pub h: f64,
    /// Sub-stepping threshold on `|F| h²`.
    pub force_tol: f64,
    /// Maximum number of step halvings.
    pub max_depth: u32,
}

impl Default for SmoothConfig {
    fn default() -> Self {
        SmoothConfig { h: 1e-3, force_tol: 1e-4, max_depth: 40 }
    }
}

/// Turning points seen while integrating.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SmoothEvent {
    /// Velocity relative to the mirror changed sign from negative to positive
    /// while the wall force outweighed gravity: the particle bounced. The
    /// momentum itself may stay negative when the mirror recedes.
    Bounce { t: f64 },
    /// Momentum changed sign from positive to negative, with the free-flight
    /// energy at that point.
    Apex { t: f64, energy: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothIntegrator {
    pub params: ScaledParams,
    pub config: SmoothConfig,
}

impl SmoothIntegrator {
    pub fn new(params: ScaledParams, config: SmoothConfig) -> Self {
        SmoothIntegrator { params, config }
    }

    /// One kick–drift–kick step of length `h` with the force frozen at `t + h/2`.
    #[inline]
    pub fn kdk(&self, s: &ClassicalState, h: f64) -> ClassicalState {
        let t_mid = s.t + 0.5 * h;
        let p_half = s.p + 0.5 * h * self.params.force(s.z, t_mid);
        let z = s.z + h * p_half;
        let p = p_half + 0.5 * h * self.params.force(z, t_mid);
        ClassicalState { z, p, t: s.t + h }
    }

    /// Height above which the wall force is negligible at every mirror phase.
    fn free_height(&self) -> f64 {
        let p = &self.params;
        if p.v0 == 0.0 {
            return f64::NEG_INFINITY;
        }
        p.lambda + libm::log(p.v0 * p.kappa / NEGLIGIBLE_WALL).max(0.0) / p.kappa
    }

    /// Number of whole steps of length `h` for which free flight from `s`
    /// stays above `floor`.
    fn free_steps(s: &ClassicalState, h: f64, floor: f64) -> u64 {
        let gap = s.z - floor;
        if gap <= 0.0 {
            return 0;
        }
        // z + pτ - τ²/2 = floor at τ = p + sqrt(p² + 2·gap).
        let tau = s.p + libm::sqrt(s.p * s.p + 2.0 * gap);
        libm::floor(tau / h) as u64
    }

    /// Whether the step `s -> next` cannot come from the true dynamics.
    ///
    /// In the frame of the wall a step can only turn mirror potential into
    /// kinetic energy, plus `(1 + λ)h` from gravity and the frame's own
    /// acceleration. Twice that speed (plus one) is allowed before the step
    /// counts as blown up.
    fn blown_up(&self, s: &ClassicalState, next: &ClassicalState, h: f64) -> bool {
        if !next.is_finite() || next.p.abs() > STATE_LIMIT || next.z.abs() > STATE_LIMIT {
            return true;
        }
        let u0 = self.relative_velocity(s);
        let u1 = self.relative_velocity(next).abs();
        let slack = (1.0 + self.params.lambda) * h;
        // Cheap pass first: the potential can only raise the bound.
        if u1 <= 2.0 * (u0.abs() + slack) + 1.0 {
            return false;
        }
        let reach = libm::sqrt(u0 * u0 + 2.0 * self.params.mirror_potential(s.z, s.t)) + slack;
        u1 > 2.0 * reach + 1.0
    }

    fn relative_velocity(&self, s: &ClassicalState) -> f64 {
        s.p - self.params.lambda * libm::cos(s.t)
    }

    fn in_contact(&self, a: &ClassicalState, b: &ClassicalState) -> bool {
        self.params.force(a.z, a.t).max(self.params.force(b.z, b.t)) > 0.0
    }

    fn needs_split(&self, s: &ClassicalState, h: f64) -> bool {
        let t_mid = s.t + 0.5 * h;
        let ahead = s.z + h * s.p;
        let f = self.params.force(s.z, t_mid).abs().max(self.params.force(ahead, t_mid).abs());
        f * h * h > self.config.force_tol
    }

    fn adaptive_step<F: FnMut(SmoothEvent)>(
        &self,
        s: &ClassicalState,
        h: f64,
        depth: u32,
        on_event: &mut F,
    ) -> ClassicalState {
        if depth < self.config.max_depth && self.needs_split(s, h) {
            let mid = self.adaptive_step(s, 0.5 * h, depth + 1, on_event);
            return self.adaptive_step(&mid, 0.5 * h, depth + 1, on_event);
        }
        let next = self.kdk(s, h);
        let (u0, u1) = (self.relative_velocity(s), self.relative_velocity(&next));
        if u0 < 0.0 && u1 >= 0.0 && self.in_contact(s, &next) {
            let frac = -u0 / (u1 - u0);
            on_event(SmoothEvent::Bounce { t: s.t + frac * h });
        }
        if s.p > 0.0 && next.p <= 0.0 {
            let frac = s.p / (s.p - next.p);
            let t = s.t + frac * h;
            // z is stationary at the apex; its ballistic peak is z + p²/2 either side.
            let energy = 0.5 * (s.gravity_energy() + next.gravity_energy());
            on_event(SmoothEvent::Apex { t, energy });
        }
        next
    }

    /// Integrate from `state.t` to exactly `t_end`, reporting turning points.
    pub fn advance<F: FnMut(SmoothEvent)>(
        &self,
        state: &ClassicalState,
        t_end: f64,
        mut on_event: F,
    ) -> Result<ClassicalState, ClassicalError> {
        let h = self.config.h;
        if !(h > 0.0) {
            return Err(crate::error::ParamError::Invalid { name: "h", requirement: "> 0", value: h }.into());
        }
        let mut s = *state;
        let start = s.t;
        let total = t_end - start;
        if total <= 0.0 {
            return Ok(s);
        }
        // Steps land on start + k·h so restarts do not shift the grid.
        let n_full = libm::floor(total / h) as u64;
        let floor = self.free_height();
        let mut k = 0;
        while k < n_full {
            let skip = Self::free_steps(&s, h, floor).min(n_full - k);
            if skip > 1 {
                let t_next = start + (k + skip) as f64 * h;
                let next = s.free_flight(t_next - s.t);
                if s.p > 0.0 && next.p <= 0.0 {
                    on_event(SmoothEvent::Apex { t: s.t + s.p, energy: s.gravity_energy() });
                }
                s = next;
                s.t = t_next;
                k += skip;
                continue;
            }
            let next = self.adaptive_step(&s, h, 0, &mut on_event);
            if self.blown_up(&s, &next, h) {
                return Err(ClassicalError::Diverged { last_good: s });
            }
            s = next;
            k += 1;
            s.t = start + k as f64 * h;
        }
        let rest = t_end - s.t;
        if rest > 1e-15 * t_end.abs().max(1.0) {
            let next = self.adaptive_step(&s, rest, 0, &mut on_event);
            if self.blown_up(&s, &next, rest) {
                return Err(ClassicalError::Diverged { last_good: s });
            }
            s = next;
        }
        s.t = t_end;
        Ok(s)
    }
}

/// Integrate the smooth dynamics to `t_end` with base step `h` and default tolerances.
pub fn integrate_smooth(
    state: &ClassicalState,
    params: &ScaledParams,
    t_end: f64,
    h: f64,
) -> Result<ClassicalState, ClassicalError> {
    params.validate()?;
    let config = SmoothConfig { h, ..SmoothConfig::default() };
    SmoothIntegrator::new(*params, config).advance(state, t_end, |_| {})
}
