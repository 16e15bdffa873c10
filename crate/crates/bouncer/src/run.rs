//! Executing one configured run.
//!
//! Artifacts are written into a staging directory next to the target, the
//! manifest last, and the staging directory is then renamed into place.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use fermi_core::classical::{sample_gaussian_ensemble, uniform_times, EnsembleRun};
use fermi_core::diagnostics::{histogram_marginal, AxisSpec, DistributionProfile};
use fermi_core::quantum::{
    init_gaussian, momentum_marginal_from, position_marginal, propagate_into, select_step, Schedule, SignalSeries,
    SplitOperator, StepProbe,
};
use fermi_core::ScaledParams;
use log::{info, warn};
use rayon::prelude::*;

use crate::analysis::{breathing_report, comb_report, diffusion_report, histogram_interior, profile_table};
use crate::config::{accelerated_turning_point, RunConfig, FORMAT_VERSION};
use crate::error::{BouncerError, Result};
use crate::fft::PlannedFft;
use crate::formats::{fmt_f64, wavefunction_bytes, Columnar, KeyValue};
use crate::manifest::{code_version, sha256_hex, Artifact, RunManifest, RunStatus, MANIFEST_FILE};

pub const CONFIG_FILE: &str = "config.toml";
/// Trajectories propagated per parallel batch before their records are reduced.
const CHUNK: usize = 512;

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub force: bool,
    /// Thread count for this run; `None` uses the ambient rayon pool.
    pub workers: Option<usize>,
}

#[derive(Debug, Clone)]
pub enum RunOutcome {
    Completed(RunManifest),
    /// A manifest for the same config already existed.
    Unchanged(RunManifest),
}

impl RunOutcome {
    pub fn manifest(&self) -> &RunManifest {
        match self {
            RunOutcome::Completed(m) | RunOutcome::Unchanged(m) => m,
        }
    }

    pub fn succeeded(&self) -> bool {
        self.manifest().status == RunStatus::Complete
    }
}

struct ArtifactWriter {
    dir: PathBuf,
    artifacts: Vec<Artifact>,
}

impl ArtifactWriter {
    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(BouncerError::io(&path))?;
        self.artifacts.push(Artifact {
            path: name.into(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
            partial: false,
        });
        Ok(())
    }

    fn text(&mut self, name: &str, text: &str) -> Result<()> {
        self.write(name, text.as_bytes())
    }
}

#[derive(Default)]
struct Outcome {
    steps: u64,
    summary: BTreeMap<String, f64>,
}

pub fn run(config: &RunConfig, opts: &RunOptions) -> Result<RunOutcome> {
    match opts.workers {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| BouncerError::config(format!("workers: {e}")))?;
            pool.install(|| run_in(config, &config.resolved_output_dir(), opts.force))
        }
        None => run_in(config, &config.resolved_output_dir(), opts.force),
    }
}

fn staging_path(out: &Path, tag: &str) -> PathBuf {
    let name = out.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into());
    out.with_file_name(format!(".{name}.{tag}-{}", std::process::id()))
}

fn remove_if_exists(path: &Path) -> Result<()> {
    if path.exists() {
        std::fs::remove_dir_all(path).map_err(BouncerError::io(path))?;
    }
    Ok(())
}

/// Run `config` with its artifacts committed to `out`.
pub fn run_in(config: &RunConfig, out: &Path, force: bool) -> Result<RunOutcome> {
    config.validate()?;
    let hash = config.hash()?;
    if out.join(MANIFEST_FILE).exists() {
        let existing = RunManifest::read(out)?;
        if !force {
            if existing.config_hash == hash {
                info!("{}: manifest exists for this config, nothing to do", out.display());
                return Ok(RunOutcome::Unchanged(existing));
            }
            return Err(BouncerError::config(format!(
                "{} holds a run of a different config; pass --force to replace it",
                out.display()
            )));
        }
    } else if !force && out.read_dir().is_ok_and(|mut d| d.next().is_some()) {
        return Err(BouncerError::config(format!(
            "{} exists, is not empty and has no manifest; pass --force to replace it",
            out.display()
        )));
    }
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(BouncerError::io(parent))?;
    }
    let staging = staging_path(out, "staging");
    remove_if_exists(&staging)?;
    std::fs::create_dir_all(&staging).map_err(BouncerError::io(&staging))?;

    let started = Instant::now();
    let mut w = ArtifactWriter { dir: staging.clone(), artifacts: Vec::new() };
    w.text(CONFIG_FILE, &config.to_toml()?)?;
    let params = config.scaled_params()?;
    let mut outcome = Outcome::default();
    let mut result = Ok(());
    if config.pipeline.classical() {
        result = classical(config, params, &mut w, &mut outcome);
    }
    if result.is_ok() && config.pipeline.quantum() {
        result = quantum(config, params, &mut w, &mut outcome);
    }
    let (status, error) = match result {
        Ok(()) => (RunStatus::Complete, None),
        Err(e) => {
            warn!("run {} failed: {e}", config.name);
            // Everything but the echoed config belongs to an unfinished run.
            for a in w.artifacts.iter_mut().filter(|a| a.path != CONFIG_FILE) {
                a.partial = true;
            }
            (RunStatus::Failed, Some(e.to_string()))
        }
    };
    let manifest = RunManifest {
        format_version: FORMAT_VERSION,
        name: config.name.clone(),
        status,
        error,
        code_version: code_version(),
        config_hash: hash,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        steps: outcome.steps,
        resolved_params: params.into(),
        summary: outcome.summary,
        artifacts: w.artifacts,
    };
    let path = staging.join(MANIFEST_FILE);
    std::fs::write(&path, manifest.to_toml()?).map_err(BouncerError::io(&path))?;

    let old = staging_path(out, "old");
    remove_if_exists(&old)?;
    if out.exists() {
        std::fs::rename(out, &old).map_err(BouncerError::io(out))?;
    }
    std::fs::rename(&staging, out).map_err(BouncerError::io(out))?;
    remove_if_exists(&old)?;
    Ok(RunOutcome::Completed(manifest))
}

fn ensure_finite_summary(summary: &mut BTreeMap<String, f64>, key: &str, value: Option<f64>) {
    summary.insert(key.into(), value.unwrap_or(f64::NAN));
}

fn classical(config: &RunConfig, params: ScaledParams, w: &mut ArtifactWriter, out: &mut Outcome) -> Result<()> {
    let e = &config.initial.ensemble;
    let seed = config.seed.ok_or_else(|| BouncerError::config("seed: required for ensemble runs"))?;
    let ensemble = sample_gaussian_ensemble(&config.gaussian(), params.lambda, e.n, seed)?;
    let attempts = ensemble.rejected + e.n as u64;
    out.summary.insert("classical_rejected_fraction".into(), ensemble.rejected as f64 / attempts as f64);
    let t_end = config.schedule.t_end;
    let n_trace = ((t_end - e.t0) / config.schedule.sample_every).round() as usize + 1;
    let trace_times = uniform_times(e.t0, t_end, n_trace.max(2));
    let snapshot_times = config.snapshot_times();
    let run = EnsembleRun::new(&ensemble, params, config.backend(), config.criterion(), trace_times, snapshot_times)?;
    let mut reducer = run.reducer();
    let mut bounces = 0u64;
    for start in (0..run.len()).step_by(CHUNK) {
        let end = (start + CHUNK).min(run.len());
        let records: Vec<_> = (start..end).into_par_iter().map(|i| run.run_trajectory(i)).collect();
        for (i, rec) in (start..end).zip(records) {
            if let Ok(r) = &rec {
                bounces += r.bounces as u64;
            }
            reducer.absorb(i, rec);
        }
    }
    let result = reducer.finish();
    out.steps += bounces;
    let trace = &result.trace;
    let table = Columnar::new("moment_trace")
        .meta("pipeline", "classical")
        .meta("trajectories", e.n - result.failed)
        .column("t", trace.times.clone())
        .column("mean_z", trace.mean_z.clone())
        .column("mean_p", trace.mean_p.clone())
        .column("var_z", trace.var_z.clone())
        .column("var_p", trace.var_p.clone())
        .column("accel_fraction", trace.accel_fraction.clone());
    w.text("classical_trace.dat", &table.to_text())?;

    let axis = AxisSpec::new(config.analysis.p_range[0], config.analysis.p_range[1], config.analysis.p_bins);
    let mut last_hist: Option<DistributionProfile> = None;
    for (k, snap) in result.snapshots.iter().enumerate() {
        let n = snap.points.len();
        let table = Columnar::new("classical_snapshot")
            .meta("t", fmt_f64(snap.t))
            .column("t", vec![snap.t; n])
            .column("z", snap.points.iter().map(|p| p.z).collect())
            .column("p", snap.points.iter().map(|p| p.p).collect())
            .column("accelerating", snap.points.iter().map(|p| p.accelerating as u8 as f64).collect());
        w.text(&format!("classical_snapshot_{k:03}.dat"), &table.to_text())?;
        let ps: Vec<f64> = snap.points.iter().map(|p| p.p).collect();
        match histogram_marginal(&ps, &axis) {
            Ok(h) => {
                w.text(
                    &format!("classical_p_hist_{k:03}.dat"),
                    &profile_table("p_histogram", "p", snap.t, &h).to_text(),
                )?;
                last_hist = Some(h);
            }
            Err(err) => {
                warn!("histogram at t = {}: {err}", snap.t);
                last_hist = None;
            }
        }
    }

    let mut kv = KeyValue::default();
    kv.push("pipeline", "classical");
    kv.push("trajectories", e.n);
    kv.push("failed_trajectories", result.failed);
    kv.push("rejected_draws", ensemble.rejected);
    let final_fraction = trace.accel_fraction.last().copied();
    kv.push_opt("accel_fraction", final_fraction);
    ensure_finite_summary(&mut out.summary, "classical_accel_fraction", final_fraction);
    analyse_series(
        config,
        &mut kv,
        w,
        "classical",
        &trace.times,
        &trace.var_p,
        &trace.var_z.iter().map(|v| v.sqrt()).collect::<Vec<_>>(),
        last_hist.as_ref().map(histogram_interior).as_ref(),
        None,
        &mut out.summary,
    )?;
    w.text("classical_analysis.txt", &kv.to_text())?;

    if result.failed > 0 {
        let first = result.first_error.map(|e| e.to_string()).unwrap_or_default();
        return Err(BouncerError::Propagation(format!(
            "{} of {} trajectories failed; first error: {first}",
            result.failed, e.n
        )));
    }
    Ok(())
}

/// Comb, diffusion and breathing diagnostics for one pipeline's outputs.
#[allow(clippy::too_many_arguments)]
fn analyse_series(
    config: &RunConfig,
    kv: &mut KeyValue,
    w: &mut ArtifactWriter,
    pipeline: &str,
    times: &[f64],
    var_p: &[f64],
    spread_z: &[f64],
    p_profile: Option<&DistributionProfile>,
    z_profile: Option<&DistributionProfile>,
    summary: &mut BTreeMap<String, f64>,
) -> Result<()> {
    let a = &config.analysis;
    let window = config.fit_window(times.first().copied().unwrap_or(0.0));
    if a.comb {
        if let Some(profile) = p_profile {
            if let Some(res) = comb_report(kv, "p_comb", profile) {
                w.text(&format!("{pipeline}_p_comb_residual.dat"), &res.to_text())?;
            }
        } else {
            kv.push_opt("p_comb.contrast", None);
        }
        summary.insert(format!("{pipeline}_comb_contrast"), kv.get_f64("p_comb.contrast").unwrap_or(f64::NAN));
        summary.insert(format!("{pipeline}_comb_spacing"), kv.get_f64("p_comb.spacing").unwrap_or(f64::NAN));
        if let Some(profile) = z_profile {
            if let Some(res) = comb_report(kv, "z_comb", profile) {
                w.text(&format!("{pipeline}_z_comb_residual.dat"), &res.to_text())?;
            }
        }
    }
    if a.diffusion {
        if let Some(res) = diffusion_report(kv, "diffusion", times, var_p, window) {
            w.text(&format!("{pipeline}_diffusion_residual.dat"), &res.to_text())?;
        }
        summary.insert(format!("{pipeline}_alpha"), kv.get_f64("diffusion.alpha").unwrap_or(f64::NAN));
        summary.insert(format!("{pipeline}_alpha_r2"), kv.get_f64("diffusion.r_squared").unwrap_or(f64::NAN));
    }
    if a.breathing {
        breathing_report(kv, "breathing", times, var_p, spread_z, window);
        summary.insert(
            format!("{pipeline}_breathing_correlation"),
            kv.get_f64("breathing.correlation").unwrap_or(f64::NAN),
        );
    }
    Ok(())
}

/// Step index of `t` on a grid of size `h`, if `t` lies on it.
fn grid_index(t: f64, h: f64) -> Option<u64> {
    let k = (t / h).round();
    (k >= 0.0 && (t - k * h).abs() <= 1e-9 * h.max(t.abs() * 1e-3)).then_some(k as u64)
}

struct Captured {
    t: f64,
    p: DistributionProfile,
    z: DistributionProfile,
    psi: Option<Vec<u8>>,
}

fn quantum(config: &RunConfig, params: ScaledParams, w: &mut ArtifactWriter, out: &mut Outcome) -> Result<()> {
    let grid = config.spatial_grid()?;
    let wp = &config.initial.wavepacket;
    let q = &config.dynamics.quantum;
    let t_end = config.schedule.t_end;
    let mut psi = init_gaussian(wp.center_z, wp.center_p, wp.delta_p, grid, params)?;
    let z_turn = wp.center_z + accelerated_turning_point(wp.center_p, t_end);
    out.summary.insert("quantum_turning_point_estimate".into(), z_turn);
    if z_turn > grid.z_max {
        warn!(
            "grid.z_max = {} is below the estimated turning point {z_turn:.1} of an accelerated component",
            grid.z_max
        );
    }
    let absorber = config.absorber();
    let h =
        if q.auto_step { select_step(&psi, q.step, absorber, &StepProbe::default(), PlannedFft::new)? } else { q.step };
    info!("quantum step h = {h}");
    out.summary.insert("quantum_step".into(), h);
    let total = grid_index(t_end, h)
        .ok_or_else(|| BouncerError::config(format!("schedule.t_end: {t_end} is not a multiple of the step {h}")))?;
    let stride = grid_index(config.schedule.sample_every, h).filter(|&s| s > 0).ok_or_else(|| {
        BouncerError::config(format!(
            "schedule.sample_every: {} is not a multiple of the step {h}",
            config.schedule.sample_every
        ))
    })?;
    let mut snap_k = Vec::new();
    for &t in &config.snapshot_times() {
        snap_k.push(grid_index(t, h).ok_or_else(|| {
            BouncerError::config(format!("schedule.snapshots: {t} is not a multiple of the step {h}"))
        })?);
    }
    let mut ks: Vec<u64> = (0..=total / stride).map(|i| i * stride).chain(snap_k.iter().copied()).collect();
    ks.push(total);
    ks.sort_unstable();
    ks.dedup();
    let schedule = Schedule::new(ks.iter().map(|&k| k as f64 * h).collect());

    let mut op = SplitOperator::new(&psi, h, absorber, PlannedFft::new(grid.n))?;
    op.set_guard_threshold(q.guard_threshold);
    let mut series = SignalSeries::default();
    let mut captured: Vec<Captured> = Vec::new();
    let write_psi = config.analysis.write_wavefunction;
    let result = propagate_into(&mut op, &mut psi, t_end, &schedule, &mut series, |state, amps| {
        let k = (state.t / h).round() as u64;
        if snap_k.binary_search(&k).is_ok() {
            captured.push(Captured {
                t: state.t,
                p: momentum_marginal_from(state, amps),
                z: position_marginal(state),
                psi: write_psi.then(|| wavefunction_bytes(state)),
            });
        }
    });
    out.steps += match &result {
        Ok(()) => total,
        Err(_) => series.times.last().map_or(0, |&t| (t / h).round() as u64),
    };

    let table = Columnar::new("signal_series")
        .meta("pipeline", "quantum")
        .meta("step", fmt_f64(h))
        .column("t", series.times.clone())
        .column("mean_z", series.mean_z.clone())
        .column("mean_p", series.mean_p.clone())
        .column("delta_z", series.delta_z.clone())
        .column("var_p", series.var_p.clone())
        .column("norm", series.norm.clone())
        .column("absorbed", series.absorbed.clone());
    w.text("quantum_series.dat", &table.to_text())?;
    for (k, c) in captured.iter().enumerate() {
        w.text(&format!("quantum_p_marginal_{k:03}.dat"), &profile_table("p_marginal", "p", c.t, &c.p).to_text())?;
        w.text(&format!("quantum_z_marginal_{k:03}.dat"), &profile_table("z_marginal", "z", c.t, &c.z).to_text())?;
        if let Some(bytes) = &c.psi {
            w.write(&format!("psi_{k:03}.bin"), bytes)?;
        }
    }
    if result.is_err() && write_psi {
        w.write("psi_at_failure.bin", &wavefunction_bytes(&psi))?;
    }

    let mut kv = KeyValue::default();
    kv.push("pipeline", "quantum");
    kv.push("step", fmt_f64(h));
    kv.push_opt("final_norm", series.norm.last().copied());
    kv.push("absorbed_norm", fmt_f64(psi.absorbed_norm));
    let last = captured.last();
    analyse_series(
        config,
        &mut kv,
        w,
        "quantum",
        &series.times,
        &series.var_p,
        &series.delta_z,
        last.map(|c| &c.p),
        last.map(|c| &c.z),
        &mut out.summary,
    )?;
    w.text("quantum_analysis.txt", &kv.to_text())?;
    result.map_err(BouncerError::from)
}
