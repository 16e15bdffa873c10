//! Seeded Gaussian ensembles and their moment traces.
//!
//! Trajectory `i` draws its initial state from its own ChaCha stream
//! `(seed, i)`, and [`EnsembleReducer`] sums per-trajectory records in index
//! order. Any scheduler that feeds the reducer in index order therefore
//! reproduces the sequential result bit for bit.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{ClassicalError, ParamError};
use crate::math;
use crate::scaling::ScaledParams;

use super::tracker::{AccelCriterion, Backend, Tracker};
use super::ClassicalState;

/// Independent Gaussians in `z` and `p`, clipped at the mirror surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianSpec {
    pub mean_z: f64,
    pub mean_p: f64,
    pub sigma_z: f64,
    pub sigma_p: f64,
    pub t0: f64,
    /// Largest tolerated fraction of draws rejected below the mirror.
    pub max_rejection: f64,
}

impl GaussianSpec {
    pub fn new(mean_z: f64, mean_p: f64, sigma_z: f64, sigma_p: f64) -> Self {
        GaussianSpec { mean_z, mean_p, sigma_z, sigma_p, t0: 0.0, max_rejection: 0.5 }
    }

    fn validate(&self) -> Result<(), ParamError> {
        ParamError::check_positive("sigma_z", self.sigma_z)?;
        ParamError::check_positive("sigma_p", self.sigma_p)?;
        ParamError::check_non_negative("max_rejection", self.max_rejection)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub states: Vec<ClassicalState>,
    pub seed: u64,
    /// Draws rejected for starting below the mirror.
    pub rejected: u64,
}

impl Ensemble {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Draw `n` states; draws below the mirror at `t0` are redrawn.
///
/// The rejection limit is tested with a three-standard-error allowance so an
/// ensemble centred exactly on the mirror (expected rate 1/2) passes a limit
/// of 1/2 reproducibly.
pub fn sample_gaussian_ensemble(
    spec: &GaussianSpec,
    lambda: f64,
    n: usize,
    seed: u64,
) -> Result<Ensemble, ClassicalError> {
    spec.validate()?;
    if n == 0 {
        return Err(ParamError::Invalid { name: "n", requirement: ">= 1", value: 0.0 }.into());
    }
    let mirror = lambda * math::sin(spec.t0);
    let mut states = Vec::with_capacity(n);
    let mut rejected = 0u64;
    let budget = 1000u64;
    for i in 0..n as u64 {
        let mut rng = stream_rng(seed, i);
        let mut tries = 0u64;
        loop {
            let gz: f64 = StandardNormal.sample(&mut rng);
            let gp: f64 = StandardNormal.sample(&mut rng);
            let z = spec.mean_z + spec.sigma_z * gz;
            let p = spec.mean_p + spec.sigma_p * gp;
            if z >= mirror {
                states.push(ClassicalState::new(z, p, spec.t0));
                break;
            }
            rejected += 1;
            tries += 1;
            if tries >= budget {
                return Err(ClassicalError::Rejection {
                    rejected,
                    attempts: rejected + states.len() as u64,
                    limit: spec.max_rejection,
                });
            }
        }
    }
    let attempts = rejected + n as u64;
    let rate = rejected as f64 / attempts as f64;
    let limit = spec.max_rejection;
    let allowance = 3.0 * math::sqrt(limit * (1.0 - limit).max(0.0) / attempts as f64);
    if rate > limit + allowance {
        return Err(ClassicalError::Rejection { rejected, attempts, limit });
    }
    if rejected > 0 {
        log::info!("rejected {rejected} of {attempts} draws below the mirror");
    }
    Ok(Ensemble { states, seed, rejected })
}

/// `n` equally spaced times from `t0` to `t_end` inclusive.
pub fn uniform_times(t0: f64, t_end: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => alloc::vec![t_end],
        _ => (0..n).map(|k| if k + 1 == n { t_end } else { t0 + (t_end - t0) * k as f64 / (n - 1) as f64 }).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    pub z: f64,
    pub p: f64,
    pub accelerating: bool,
}

/// The ensemble's phase-space cloud at one time, in trajectory order.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub points: Vec<PhasePoint>,
}

/// Ensemble moments on a time grid.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MomentTrace {
    pub times: Vec<f64>,
    pub mean_z: Vec<f64>,
    pub mean_p: Vec<f64>,
    /// Δz².
    pub var_z: Vec<f64>,
    /// Δp².
    pub var_p: Vec<f64>,
    pub accel_fraction: Vec<f64>,
}

/// Everything one trajectory contributes to the reduction.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    /// One point per entry of the run's merged output times.
    pub points: Vec<PhasePoint>,
    pub bounces: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleOutput {
    pub trace: MomentTrace,
    pub snapshots: Vec<Snapshot>,
    /// Trajectories dropped after a propagation error.
    pub failed: usize,
    pub first_error: Option<ClassicalError>,
}

/// A configured ensemble propagation, split into per-trajectory work and a
/// deterministic reduction.
#[derive(Debug, Clone)]
pub struct EnsembleRun<'a> {
    pub ensemble: &'a Ensemble,
    pub params: ScaledParams,
    pub backend: Backend,
    pub criterion: AccelCriterion,
    trace_times: Vec<f64>,
    snapshot_times: Vec<f64>,
    /// Sorted union of trace and snapshot times.
    output_times: Vec<f64>,
}

fn check_increasing(times: &[f64], what: &'static str) -> Result<(), ClassicalError> {
    if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
        return Err(ClassicalError::Schedule(what));
    }
    Ok(())
}

impl<'a> EnsembleRun<'a> {
    pub fn new(
        ensemble: &'a Ensemble,
        params: ScaledParams,
        backend: Backend,
        criterion: AccelCriterion,
        trace_times: Vec<f64>,
        snapshot_times: Vec<f64>,
    ) -> Result<Self, ClassicalError> {
        params.validate()?;
        if ensemble.is_empty() {
            return Err(ClassicalError::Schedule("empty ensemble"));
        }
        check_increasing(&trace_times, "trace times must be strictly increasing")?;
        check_increasing(&snapshot_times, "snapshot times must be strictly increasing")?;
        let t0 = ensemble.states.iter().map(|s| s.t).fold(f64::NEG_INFINITY, f64::max);
        if trace_times.iter().chain(&snapshot_times).any(|&t| t < t0) {
            return Err(ClassicalError::Schedule("output time before the ensemble start"));
        }
        let mut output_times: Vec<f64> = trace_times.iter().chain(&snapshot_times).copied().collect();
        output_times.sort_by(f64::total_cmp);
        output_times.dedup();
        Ok(EnsembleRun { ensemble, params, backend, criterion, trace_times, snapshot_times, output_times })
    }

    pub fn trace_times(&self) -> &[f64] {
        &self.trace_times
    }

    pub fn snapshot_times(&self) -> &[f64] {
        &self.snapshot_times
    }

    pub fn len(&self) -> usize {
        self.ensemble.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ensemble.is_empty()
    }

    pub fn run_trajectory(&self, index: usize) -> Result<TrajectoryRecord, ClassicalError> {
        let mut tracker = Tracker::new(self.ensemble.states[index]);
        let mut points = Vec::with_capacity(self.output_times.len());
        for &t in &self.output_times {
            tracker.advance_to(t, &self.params, &self.backend)?;
            let s = tracker.state();
            points.push(PhasePoint {
                z: s.z,
                p: s.p,
                accelerating: self.criterion.is_accelerating(tracker.energies()),
            });
        }
        Ok(TrajectoryRecord { points, bounces: tracker.bounce_times().len() })
    }

    pub fn reducer(&self) -> EnsembleReducer {
        let n_out = self.output_times.len();
        let locate = |times: &[f64]| -> Vec<usize> {
            times.iter().map(|t| self.output_times.binary_search_by(|x| x.total_cmp(t)).unwrap_or(0)).collect()
        };
        EnsembleReducer {
            trace_slots: locate(&self.trace_times),
            snapshot_slots: locate(&self.snapshot_times),
            trace_times: self.trace_times.clone(),
            snapshots: self
                .snapshot_times
                .iter()
                .map(|&t| Snapshot { t, points: Vec::with_capacity(self.ensemble.len()) })
                .collect(),
            sums: alloc::vec![[0.0; 5]; n_out],
            count: 0,
            failed: 0,
            first_error: None,
            next_index: 0,
        }
    }
}

/// Order-sensitive accumulator of trajectory records.
#[derive(Debug, Clone)]
pub struct EnsembleReducer {
    trace_slots: Vec<usize>,
    snapshot_slots: Vec<usize>,
    trace_times: Vec<f64>,
    snapshots: Vec<Snapshot>,
    /// Per output time: Σz, Σz², Σp, Σp², Σflag.
    sums: Vec<[f64; 5]>,
    count: usize,
    failed: usize,
    first_error: Option<ClassicalError>,
    next_index: usize,
}

impl EnsembleReducer {
    /// Absorb the result of trajectory `index`. Records must arrive in index order.
    pub fn absorb(&mut self, index: usize, record: Result<TrajectoryRecord, ClassicalError>) {
        assert_eq!(index, self.next_index, "trajectory records must be reduced in index order");
        self.next_index += 1;
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                log::warn!("trajectory {index} dropped: {e}");
                self.failed += 1;
                self.first_error.get_or_insert(e);
                return;
            }
        };
        self.count += 1;
        for (sum, pt) in self.sums.iter_mut().zip(&record.points) {
            sum[0] += pt.z;
            sum[1] += pt.z * pt.z;
            sum[2] += pt.p;
            sum[3] += pt.p * pt.p;
            sum[4] += pt.accelerating as u8 as f64;
        }
        for (snap, &slot) in self.snapshots.iter_mut().zip(&self.snapshot_slots) {
            snap.points.push(record.points[slot]);
        }
    }

    pub fn finish(self) -> EnsembleOutput {
        let n = self.count as f64;
        let mut trace = MomentTrace::default();
        if self.count > 0 {
            for (&t, &slot) in self.trace_times.iter().zip(&self.trace_slots) {
                let [sz, szz, sp, spp, sf] = self.sums[slot];
                let (mz, mp) = (sz / n, sp / n);
                trace.times.push(t);
                trace.mean_z.push(mz);
                trace.mean_p.push(mp);
                trace.var_z.push((szz / n - mz * mz).max(0.0));
                trace.var_p.push((spp / n - mp * mp).max(0.0));
                trace.accel_fraction.push(sf / n);
            }
        }
        EnsembleOutput { trace, snapshots: self.snapshots, failed: self.failed, first_error: self.first_error }
    }
}

/// Propagate every trajectory sequentially and reduce.
pub fn propagate_ensemble(run: &EnsembleRun<'_>) -> EnsembleOutput {
    let mut reducer = run.reducer();
    for i in 0..run.len() {
        reducer.absorb(i, run.run_trajectory(i));
    }
    reducer.finish()
}
