use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{ParamError, QuantumError};
use crate::math;
use crate::scaling::POTENTIAL_CEILING;

use super::fft::SpectralTransform;
use super::state::{Moments, WavepacketState};

/// Wall phases below this magnitude are dropped from the per-step update.
const NEGLIGIBLE_PHASE: f64 = 1e-20;

/// Smooth absorbing mask `cos(πξ/2)^(1/8)` over the top `fraction` of the box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Absorber {
    pub fraction: f64,
}

impl Default for Absorber {
    fn default() -> Self {
        Absorber { fraction: 0.05 }
    }
}

/// Strang-split propagator for a fixed step `h`.
///
/// A step applies the half potential phase at `t + h/2`, the full kinetic
/// phase `exp(-i p² h / 2kbar)` in momentum space, and the half potential
/// phase again.
pub struct SplitOperator<T> {
    fft: T,
    h: f64,
    /// Kinetic phase per FFT bin, including the 1/n of the inverse transform.
    kinetic: Vec<Complex64>,
    /// Half-step phase of the gravity term `exp(-i z h / 2kbar)`.
    gravity_half: Vec<Complex64>,
    /// `V0 exp(-κ z)` on the points where the wall phase can matter.
    wall_profile: Vec<f64>,
    wall_phase: Vec<Complex64>,
    mask: Option<(usize, Vec<f64>)>,
    /// Momentum magnitude beyond which probability counts as leaking.
    p_guard: f64,
    guard_threshold: f64,
    params: crate::scaling::ScaledParams,
    grid: super::grid::SpatialGrid,
}

impl<T: SpectralTransform> SplitOperator<T> {
    pub fn new(psi: &WavepacketState, h: f64, absorber: Option<Absorber>, fft: T) -> Result<Self, QuantumError> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(ParamError::Invalid { name: "h", requirement: "finite and > 0", value: h }.into());
        }
        let grid = psi.grid;
        let params = psi.params;
        if fft.len() != grid.n {
            return Err(QuantumError::InvalidGrid("transform length differs from the grid size"));
        }
        let kbar = params.kbar;
        let inv_n = 1.0 / grid.n as f64;
        let kinetic = (0..grid.n)
            .map(|k| {
                let p = grid.momentum(k, kbar);
                let ph = -p * p * h / (2.0 * kbar);
                Complex64::new(math::cos(ph) * inv_n, math::sin(ph) * inv_n)
            })
            .collect();
        let gravity_half = (0..grid.n)
            .map(|i| {
                let ph = -grid.z(i) * h / (2.0 * kbar);
                Complex64::new(math::cos(ph), math::sin(ph))
            })
            .collect();
        let peak_lift = math::exp(params.kappa * params.lambda);
        let wall_profile: Vec<f64> = (0..grid.n)
            .map(|i| crate::scaling::saturated_exp_scaled(params.v0, -params.kappa * grid.z(i)))
            .take_while(|w| w * peak_lift * h / (2.0 * kbar) > NEGLIGIBLE_PHASE)
            .collect();
        let wall_phase = alloc::vec![Complex64::new(1.0, 0.0); wall_profile.len()];
        let mask = absorber.map(|a| {
            let start = ((1.0 - a.fraction.clamp(0.0, 1.0)) * grid.n as f64) as usize;
            let width = (grid.n - start).max(1) as f64;
            let values = (start..grid.n)
                .map(|i| {
                    let xi = (i - start) as f64 / width;
                    math::powf(math::cos(0.5 * PI * xi), 0.125)
                })
                .collect();
            (start, values)
        });
        Ok(SplitOperator {
            fft,
            h,
            kinetic,
            gravity_half,
            wall_profile,
            wall_phase,
            mask,
            p_guard: 0.95 * grid.p_max(kbar),
            guard_threshold: 1e-6,
            params,
            grid,
        })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn transform(&mut self) -> &mut T {
        &mut self.fft
    }

    /// Probability fraction beyond which leakage to the grid edge aborts a run.
    pub fn set_guard_threshold(&mut self, threshold: f64) {
        self.guard_threshold = threshold;
    }

    fn update_wall_phase(&mut self, t_mid: f64) {
        let lift = math::exp(self.params.kappa * self.params.lambda * math::sin(t_mid));
        let scale = self.h / (2.0 * self.params.kbar);
        for ((out, &w), g) in self.wall_phase.iter_mut().zip(&self.wall_profile).zip(&self.gravity_half) {
            let v = (w * lift).min(POTENTIAL_CEILING);
            let ph = -v * scale;
            *out = g * Complex64::new(math::cos(ph), math::sin(ph));
        }
    }

    fn half_potential(&self, psi: &mut [Complex64]) {
        let split = self.wall_phase.len();
        let (wall, free) = psi.split_at_mut(split);
        for (c, ph) in wall.iter_mut().zip(&self.wall_phase) {
            *c *= ph;
        }
        for (c, ph) in free.iter_mut().zip(&self.gravity_half[split..]) {
            *c *= ph;
        }
    }

    fn step_raw(&mut self, state: &mut WavepacketState) {
        self.update_wall_phase(state.t + 0.5 * self.h);
        self.half_potential(&mut state.psi);
        self.fft.forward(&mut state.psi);
        for (c, k) in state.psi.iter_mut().zip(&self.kinetic) {
            *c *= k;
        }
        self.fft.inverse(&mut state.psi);
        self.half_potential(&mut state.psi);
        if let Some((start, values)) = &self.mask {
            let mut removed = 0.0;
            for (c, &m) in state.psi[*start..].iter_mut().zip(values) {
                let before = c.norm_sqr();
                *c *= m;
                removed += before - c.norm_sqr();
            }
            state.absorbed_norm += removed * self.grid.dz();
        }
        state.t += self.h;
    }

    /// Advance by one step.
    pub fn step(&mut self, state: &mut WavepacketState) -> Result<(), QuantumError> {
        self.step_raw(state);
        if state.psi.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(QuantumError::Diverged { t: state.t });
        }
        Ok(())
    }

    /// Advance by `n` steps, landing exactly on `t_start + n·h`.
    pub fn steps(&mut self, state: &mut WavepacketState, n: u64) -> Result<(), QuantumError> {
        let t_start = state.t;
        for k in 1..=n {
            self.step_raw(state);
            state.t = t_start + k as f64 * self.h;
            if k % 1024 == 0 && !state.norm().is_finite() {
                return Err(QuantumError::Diverged { t: state.t });
            }
        }
        if !state.norm().is_finite() {
            return Err(QuantumError::Diverged { t: state.t });
        }
        Ok(())
    }

    /// Moments plus momentum amplitudes, with the edge-leakage guards applied.
    pub fn observe(&mut self, state: &WavepacketState) -> Result<(Moments, Vec<Complex64>), QuantumError> {
        let amps = state.momentum_amplitudes(&mut self.fft);
        let moments = state.moments_with(&amps);
        if !moments.norm.is_finite() || !moments.var_p.is_finite() {
            return Err(QuantumError::Diverged { t: state.t });
        }
        let kbar = self.params.kbar;
        let dp = self.grid.dp(kbar);
        let edge: f64 = amps
            .iter()
            .enumerate()
            .filter(|(k, _)| self.grid.momentum(*k, kbar).abs() > self.p_guard)
            .map(|(_, c)| c.norm_sqr())
            .sum::<f64>()
            * dp;
        if edge > self.guard_threshold * moments.norm {
            return Err(QuantumError::MomentumOverflow { t: state.t, fraction: edge / moments.norm });
        }
        if self.mask.is_none() {
            let start = self.grid.n - self.grid.n / 20;
            let top: f64 = state.psi[start..].iter().map(|c| c.norm_sqr()).sum::<f64>() * self.grid.dz();
            if top > self.guard_threshold * moments.norm {
                return Err(QuantumError::BoxOverflow { t: state.t, fraction: top / moments.norm });
            }
        }
        Ok((moments, amps))
    }
}

/// Observation times on the step grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub times: Vec<f64>,
}

impl Schedule {
    pub fn new(times: Vec<f64>) -> Self {
        Schedule { times }
    }

    /// Every `stride` steps of size `h` from `t0` up to and including `t_end`.
    pub fn every(t0: f64, t_end: f64, h: f64, stride: u64) -> Self {
        let total = math::round((t_end - t0) / h) as u64;
        let stride = stride.max(1);
        let mut times: Vec<f64> = (0..=total / stride).map(|k| t0 + (k * stride) as f64 * h).collect();
        if total % stride != 0 {
            times.push(t0 + total as f64 * h);
        }
        Schedule { times }
    }

    /// Step index of each time relative to `t0`.
    fn step_indices(&self, t0: f64, t_end: f64, h: f64) -> Result<Vec<u64>, QuantumError> {
        let mut last = None;
        self.times
            .iter()
            .map(|&time| {
                let k = math::round((time - t0) / h);
                let on_grid = ((time - t0) - k * h).abs() <= 1e-9 * h.max(time.abs() * 1e-3);
                let in_range = time >= t0 - 1e-12 && time <= t_end + 1e-9 * h;
                if !on_grid || !in_range || k < 0.0 || last.is_some_and(|l| k as u64 <= l) {
                    return Err(QuantumError::Schedule { time });
                }
                last = Some(k as u64);
                Ok(k as u64)
            })
            .collect()
    }
}

/// Observables sampled during a propagation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SignalSeries {
    pub times: Vec<f64>,
    pub mean_z: Vec<f64>,
    pub mean_p: Vec<f64>,
    /// Δz, the position standard deviation.
    pub delta_z: Vec<f64>,
    /// Δp², the momentum variance.
    pub var_p: Vec<f64>,
    pub norm: Vec<f64>,
    pub absorbed: Vec<f64>,
}

impl SignalSeries {
    fn push(&mut self, t: f64, m: &Moments, absorbed: f64) {
        self.times.push(t);
        self.mean_z.push(m.mean_z);
        self.mean_p.push(m.mean_p);
        self.delta_z.push(m.delta_z());
        self.var_p.push(m.var_p);
        self.norm.push(m.norm);
        self.absorbed.push(absorbed);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Propagate to `t_end`, sampling observables at every schedule time.
///
/// `on_sample` sees the state and its momentum amplitudes (FFT order) at each
/// sample, which is where marginals are taken.
pub fn propagate<T, F>(
    op: &mut SplitOperator<T>,
    psi: &mut WavepacketState,
    t_end: f64,
    schedule: &Schedule,
    on_sample: F,
) -> Result<SignalSeries, QuantumError>
where
    T: SpectralTransform,
    F: FnMut(&WavepacketState, &[Complex64]),
{
    let mut series = SignalSeries::default();
    propagate_into(op, psi, t_end, schedule, &mut series, on_sample)?;
    Ok(series)
}

/// [`propagate`] appending to `series`, which keeps the samples taken before
/// an error.
pub fn propagate_into<T, F>(
    op: &mut SplitOperator<T>,
    psi: &mut WavepacketState,
    t_end: f64,
    schedule: &Schedule,
    series: &mut SignalSeries,
    mut on_sample: F,
) -> Result<(), QuantumError>
where
    T: SpectralTransform,
    F: FnMut(&WavepacketState, &[Complex64]),
{
    let h = op.h();
    let t0 = psi.t;
    let indices = schedule.step_indices(t0, t_end, h)?;
    let total = math::round((t_end - t0) / h) as u64;
    if ((t_end - t0) - total as f64 * h).abs() > 1e-9 * h.max(1e-3 * t_end.abs()) {
        return Err(QuantumError::Schedule { time: t_end });
    }
    let mut done = 0u64;
    for &k in &indices {
        op.steps(psi, k - done)?;
        psi.t = t0 + k as f64 * h;
        done = k;
        let (m, amps) = op.observe(psi)?;
        series.push(psi.t, &m, psi.absorbed_norm);
        on_sample(psi, &amps);
    }
    op.steps(psi, total - done)?;
    psi.t = t0 + total as f64 * h;
    Ok(())
}

/// `‖ψ_h - ψ_{h/2}‖ / ‖ψ_{h/2} - ψ_{h/4}‖` after propagating for `duration`.
///
/// Returns the ratio and the two distances. A second-order scheme gives a
/// ratio near 4.
pub fn convergence_ratio<T, M>(
    psi: &WavepacketState,
    h: f64,
    duration: f64,
    absorber: Option<Absorber>,
    mut make_fft: M,
) -> Result<(f64, f64, f64), QuantumError>
where
    T: SpectralTransform,
    M: FnMut(usize) -> T,
{
    let run = |hh: f64, fft: T| -> Result<WavepacketState, QuantumError> {
        let mut op = SplitOperator::new(psi, hh, absorber, fft)?;
        let mut state = psi.clone();
        let n = math::round(duration / hh) as u64;
        op.steps(&mut state, n)?;
        Ok(state)
    };
    let coarse = run(h, make_fft(psi.grid.n))?;
    let mid = run(0.5 * h, make_fft(psi.grid.n))?;
    let fine = run(0.25 * h, make_fft(psi.grid.n))?;
    let d1 = coarse.distance(&mid);
    let d2 = mid.distance(&fine);
    Ok((d1 / d2, d1, d2))
}

/// Step-size search by repeated halving.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepProbe {
    pub duration: f64,
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// Distances below this count as converged regardless of the ratio.
    pub floor: f64,
    pub max_halvings: u32,
}

impl Default for StepProbe {
    fn default() -> Self {
        StepProbe { duration: 1.0, min_ratio: 3.0, max_ratio: 5.0, floor: 1e-10, max_halvings: 6 }
    }
}

/// Halve `h` until the probe run shows second-order convergence.
pub fn select_step<T, M>(
    psi: &WavepacketState,
    h: f64,
    absorber: Option<Absorber>,
    probe: &StepProbe,
    mut make_fft: M,
) -> Result<f64, QuantumError>
where
    T: SpectralTransform,
    M: FnMut(usize) -> T,
{
    let mut h = h;
    for _ in 0..=probe.max_halvings {
        let dur = math::round(probe.duration / h).max(1.0) * h;
        let (ratio, d1, _) = convergence_ratio(psi, h, dur, absorber, &mut make_fft)?;
        log::debug!("step probe h = {h}: ratio {ratio}, distance {d1}");
        if d1 < probe.floor || (ratio >= probe.min_ratio && ratio <= probe.max_ratio) {
            return Ok(h);
        }
        h *= 0.5;
    }
    log::warn!("step probe did not settle; using h = {h}");
    Ok(h)
}
