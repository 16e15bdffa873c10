//! Hard-wall bounce map.
//!
//! Between bounces the particle flies ballistically; it hits the mirror at the
//! first `τ > 0` with `z + pτ - τ²/2 = λ sin(t + τ)` and reflects elastically
//! in the mirror frame, `p' = 2λ cos(t_hit) - p_in`.

use crate::error::ClassicalError;
use crate::math;

use super::ClassicalState;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BounceConfig {
    /// Smallest step of the root search; two roots closer than this can be missed.
    pub min_step: f64,
    /// Residual target, relative to the magnitude of the flight terms.
    pub residual_tol: f64,
    /// Relative impact speed below which a bounce counts as grazing.
    pub grazing_speed: f64,
    /// Time skipped past a grazing contact before searching again.
    pub grazing_skip: f64,
}

impl Default for BounceConfig {
    fn default() -> Self {
        BounceConfig { min_step: 1e-6, residual_tol: 1e-12, grazing_speed: 1e-10, grazing_skip: 1e-8 }
    }
}

/// Outcome of one bounce.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounce {
    /// Time of flight from the starting state to impact.
    pub flight_time: f64,
    /// Momentum just before impact.
    pub p_in: f64,
    /// State just after reflection; `z` is on the mirror.
    pub after: ClassicalState,
    /// Grazing contacts skipped on the way.
    pub grazes: u32,
}

/// Hard-wall dynamics for modulation strength `lambda`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HardWall {
    pub lambda: f64,
    pub config: BounceConfig,
}

impl HardWall {
    pub fn new(lambda: f64) -> Self {
        HardWall { lambda, config: BounceConfig::default() }
    }

    pub fn with_config(lambda: f64, config: BounceConfig) -> Self {
        HardWall { lambda, config }
    }

    #[inline]
    fn gap(&self, s: &ClassicalState, tau: f64) -> f64 {
        s.z + s.p * tau - 0.5 * tau * tau - self.lambda * math::sin(s.t + tau)
    }

    #[inline]
    fn gap_rate(&self, s: &ClassicalState, tau: f64) -> f64 {
        s.p - tau - self.lambda * math::cos(s.t + tau)
    }

    /// Latest time by which the parabola is guaranteed to be below the lowest mirror position.
    fn horizon(&self, s: &ClassicalState) -> f64 {
        let lift = (s.z + self.lambda).max(0.0);
        s.p.max(0.0) + math::sqrt(s.p * s.p + 2.0 * lift) + 1.0
    }

    /// Smallest `τ >= tau_start` at which the gap closes.
    fn first_contact(&self, s: &ClassicalState, tau_start: f64) -> Result<f64, ClassicalError> {
        let cfg = &self.config;
        let horizon = self.horizon(s);
        let curvature = 1.0 + self.lambda;
        let scale = 1.0 + s.z.abs() + horizon * (s.p.abs() + horizon) + self.lambda;
        let tol = cfg.residual_tol * scale;

        let mut tau = tau_start;
        let mut gap = self.gap(s, tau);
        if gap < -tol {
            return Err(ClassicalError::BelowMirror { t: s.t + tau, depth: -gap });
        }
        if gap <= tol && self.gap_rate(s, tau) < 0.0 {
            return Err(ClassicalError::BelowMirror { t: s.t + tau, depth: -gap });
        }
        gap = gap.max(0.0);

        // March with steps over which the gap provably stays positive, using
        // |gap''| <= 1 + λ.
        let (lo, hi) = loop {
            let slope = self.gap_rate(s, tau).abs();
            let safe = (math::sqrt(slope * slope + 2.0 * curvature * gap) - slope) / curvature;
            let step = safe.max(cfg.min_step);
            let next = tau + step;
            let next_gap = self.gap(s, next);
            if next_gap <= 0.0 {
                break (tau, next);
            }
            if next > horizon {
                return Err(ClassicalError::NoBounce { t: s.t, horizon });
            }
            tau = next;
            gap = next_gap;
        };

        Ok(self.polish(s, lo, hi, tol))
    }

    /// Bisection down to a narrow bracket, then Newton kept inside it.
    fn polish(&self, s: &ClassicalState, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
        for _ in 0..200 {
            if hi - lo < 1e-9 {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if self.gap(s, mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut tau = hi;
        for _ in 0..20 {
            let g = self.gap(s, tau);
            if g.abs() <= tol {
                return tau;
            }
            let rate = self.gap_rate(s, tau);
            let candidate = tau - g / rate;
            if rate == 0.0 || !(candidate > lo && candidate < hi + 1e-9) {
                break;
            }
            if g > 0.0 {
                lo = lo.max(tau.min(candidate));
            }
            tau = candidate;
        }
        if self.gap(s, tau).abs() <= self.gap(s, hi).abs() {
            tau
        } else {
            hi
        }
    }

    pub fn find_bounce_time(&self, state: &ClassicalState) -> Result<f64, ClassicalError> {
        self.first_contact(state, 0.0)
    }

    /// Fly to the next impact and reflect.
    pub fn bounce(&self, state: &ClassicalState) -> Result<Bounce, ClassicalError> {
        let mut tau_start = 0.0;
        let mut grazes = 0;
        loop {
            let tau = self.first_contact(state, tau_start)?;
            let t_hit = state.t + tau;
            let p_in = state.p - tau;
            let wall_speed = self.lambda * math::cos(t_hit);
            if (p_in - wall_speed).abs() < self.config.grazing_speed {
                log::debug!("grazing contact at t = {t_hit}, skipping ahead");
                grazes += 1;
                tau_start = tau + self.config.grazing_skip;
                continue;
            }
            let after = ClassicalState { z: self.lambda * math::sin(t_hit), p: 2.0 * wall_speed - p_in, t: t_hit };
            return Ok(Bounce { flight_time: tau, p_in, after, grazes });
        }
    }
}

/// Time of flight from `state` to its next impact on the mirror `z = λ sin t`.
pub fn find_bounce_time(state: &ClassicalState, lambda: f64) -> Result<f64, ClassicalError> {
    HardWall::new(lambda).find_bounce_time(state)
}

/// The state right after the next bounce.
pub fn bounce_map_step(state: &ClassicalState, lambda: f64) -> Result<ClassicalState, ClassicalError> {
    HardWall::new(lambda).bounce(state).map(|b| b.after)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    /// Dense scan for the first sign change of the gap, step `dt`.
    fn scan_first_root(z: f64, p: f64, t: f64, lambda: f64, dt: f64) -> f64 {
        let g = |tau: f64| z + p * tau - 0.5 * tau * tau - lambda * libm::sin(t + tau);
        let mut tau = dt;
        while g(tau) > 0.0 {
            tau += dt;
        }
        let (mut lo, mut hi) = (tau - dt, tau);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                lo = mid
            } else {
                hi = mid
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn static_mirror_free_fall() {
        let tau = find_bounce_time(&ClassicalState::new(2.0, 0.0, 0.0), 0.0).unwrap();
        assert!((tau - 2.0).abs() < 1e-12);
        for t in [0.0, 1.3, 100.0] {
            let tau = find_bounce_time(&ClassicalState::new(0.0, 1.0, t), 0.0).unwrap();
            assert!((tau - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn matches_dense_scan() {
        let expected = scan_first_root(0.5, 0.0, 0.0, 0.1, 1e-6);
        let tau = find_bounce_time(&ClassicalState::new(0.5, 0.0, 0.0), 0.1).unwrap();
        assert!((tau - expected).abs() < 1e-9, "{tau} vs {expected}");
        for (z, p, t, lambda) in [(0.9, 2.0, 0.4, 1.7), (2.5, -0.2, 2.0, 2.4), (2.0, 5.0, 5.5, 0.8)] {
            let expected = scan_first_root(z, p, t, lambda, 1e-5);
            let tau = find_bounce_time(&ClassicalState::new(z, p, t), lambda).unwrap();
            assert!((tau - expected).abs() < 1e-9, "{tau} vs {expected}");
        }
    }

    #[test]
    fn reflection_examples() {
        let wall = HardWall::new(0.0);
        let b = wall.bounce(&ClassicalState::new(2.0, 0.0, 0.0)).unwrap();
        assert!((b.p_in + 2.0).abs() < 1e-12);
        assert!((b.after.p - 2.0).abs() < 1e-12);
        assert!((b.after.gravity_energy() - 2.0).abs() < 1e-12);

        // Start half a unit-speed parabola before an impact at t = 0 and at t = π.
        for (t_hit, expected) in [(0.0, 4.0), (PI, 0.0)] {
            let at = ClassicalState::new(libm::sin(t_hit), -2.0, t_hit);
            let start = at.free_flight(-0.5);
            let b = HardWall::new(1.0).bounce(&start).unwrap();
            assert!((b.after.t - t_hit).abs() < 1e-9);
            assert!((b.after.p - expected).abs() < 1e-8, "{}", b.after.p);
        }
    }

    #[test]
    fn residual_is_small() {
        let wall = HardWall::new(1.7);
        let mut s = ClassicalState::new(0.05, 2.0 * PI * PI, 0.0);
        for _ in 0..30 {
            let b = wall.bounce(&s).unwrap();
            let g = wall.gap(&s, b.flight_time);
            let scale = 1.0 + s.z.abs() + b.flight_time * (s.p.abs() + b.flight_time);
            assert!(g.abs() <= 1e-12 * scale * 4.0, "{g}");
            s = b.after;
        }
    }

    #[test]
    fn below_mirror_rejected() {
        let err = find_bounce_time(&ClassicalState::new(-0.5, 0.0, 0.0), 0.0).unwrap_err();
        assert!(matches!(err, ClassicalError::BelowMirror { .. }));
    }

    #[test]
    fn static_wall_conserves_energy() {
        let wall = HardWall::new(0.0);
        let mut s = ClassicalState::new(2.0, 0.0, 0.0);
        for _ in 0..1000 {
            let next = wall.bounce(&s).unwrap().after;
            assert!((next.gravity_energy() - 2.0).abs() < 1e-10);
            s = next;
        }
    }
}
