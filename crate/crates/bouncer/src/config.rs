//! Run configuration: TOML text with every default spelled out on resolve.
//!
//! ```toml
//! name = "fig2-in-window"
//! pipeline = "quantum"
//!
//! [physics.scaled]
//! v0 = 1.0
//! kappa = 1.0
//! lambda = 1.7
//! kbar = 1.0
//! ```
//!
//! Unknown keys are rejected. `--set path=value` overrides are applied to the
//! parsed table before it is checked, so an override is validated exactly like
//! a value written in the file.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use fermi_core::classical::{AccelCriterion, Backend, BounceConfig, GaussianSpec, SmoothConfig};
use fermi_core::quantum::{Absorber, SpatialGrid};
use fermi_core::scaling::{to_dimensionless, HBAR, STANDARD_GRAVITY};
use fermi_core::{LabParams, ScaledParams};
use log::info;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{BouncerError, Result};

pub const FORMAT_VERSION: u32 = 1;

/// Environment variable naming the root for relative output directories.
pub const OUTPUT_ROOT_ENV: &str = "FERMI_BOUNCER_OUTPUT_ROOT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pipeline {
    Classical,
    Quantum,
    Both,
}

impl Pipeline {
    pub fn classical(self) -> bool {
        matches!(self, Pipeline::Classical | Pipeline::Both)
    }

    pub fn quantum(self) -> bool {
        matches!(self, Pipeline::Quantum | Pipeline::Both)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_format_version")]
    pub format_version: u32,
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default = "default_pipeline")]
    pub pipeline: Pipeline,
    /// Required whenever the classical pipeline runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Relative paths resolve against the output root; defaults to `name`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    pub physics: Physics,
    #[serde(default)]
    pub dynamics: Dynamics,
    #[serde(default)]
    pub initial: Initial,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub schedule: ScheduleConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Physics {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lab: Option<LabConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaled: Option<ScaledConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaledConfig {
    pub v0: f64,
    pub kappa: f64,
    pub lambda: f64,
    pub kbar: f64,
}

/// SI parameters; `mass`, `gravity` and `hbar` default to cesium on Earth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabConfig {
    #[serde(default = "default_mass")]
    pub mass: f64,
    #[serde(default = "default_gravity")]
    pub gravity: f64,
    pub decay_wavenumber: f64,
    pub mod_frequency: f64,
    pub mod_amplitude: f64,
    pub rabi_eff: f64,
    #[serde(default = "default_hbar")]
    pub hbar: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    HardWall,
    Smooth,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Dynamics {
    #[serde(default)]
    pub classical: ClassicalDynamics,
    #[serde(default)]
    pub quantum: QuantumDynamics,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassicalDynamics {
    pub backend: BackendKind,
    /// Smooth backend base step.
    pub h: f64,
    pub force_tol: f64,
    pub max_depth: u32,
    /// Number of trailing bounce gains inspected by the acceleration flag.
    pub accel_window: usize,
    pub accel_threshold: f64,
}

impl Default for ClassicalDynamics {
    fn default() -> Self {
        let smooth = SmoothConfig::default();
        let accel = AccelCriterion::default();
        ClassicalDynamics {
            backend: BackendKind::Smooth,
            h: smooth.h,
            force_tol: smooth.force_tol,
            max_depth: smooth.max_depth,
            accel_window: accel.window,
            accel_threshold: accel.threshold,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuantumDynamics {
    pub step: f64,
    /// Halve `step` at startup until a short probe run converges at second order.
    pub auto_step: bool,
    pub absorber: bool,
    pub absorber_fraction: f64,
    /// Probability fraction at the grid edges that aborts a run.
    pub guard_threshold: f64,
}

impl Default for QuantumDynamics {
    fn default() -> Self {
        QuantumDynamics {
            step: 2e-3,
            auto_step: true,
            absorber: false,
            absorber_fraction: Absorber::default().fraction,
            guard_threshold: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Initial {
    #[serde(default)]
    pub ensemble: EnsembleConfig,
    #[serde(default)]
    pub wavepacket: WavepacketConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleConfig {
    pub mean_z: f64,
    pub mean_p: f64,
    pub sigma_z: f64,
    pub sigma_p: f64,
    pub n: usize,
    pub t0: f64,
    pub max_rejection: f64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            mean_z: 0.0,
            mean_p: 2.0 * PI * PI,
            sigma_z: 0.1,
            sigma_p: 0.1,
            n: 10_000,
            t0: 0.0,
            max_rejection: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WavepacketConfig {
    pub center_z: f64,
    pub center_p: f64,
    pub delta_p: f64,
}

impl Default for WavepacketConfig {
    fn default() -> Self {
        WavepacketConfig { center_z: 0.0, center_p: 2.0 * PI * PI, delta_p: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub z_min: f64,
    pub z_max: f64,
    pub n_points: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { z_min: -20.0, z_max: 1200.0, n_points: 1 << 15 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleConfig {
    pub t_end: f64,
    /// Spacing of trace samples; quantum runs need a multiple of the step.
    pub sample_every: f64,
    /// Times at which marginals (and classical point clouds) are written.
    /// The final time is always included.
    pub snapshots: Vec<f64>,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        ScheduleConfig { t_end: 500.0, sample_every: 0.5, snapshots: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    pub comb: bool,
    pub breathing: bool,
    pub diffusion: bool,
    /// Time window for the power-law fit; `[0, 0]` means the last 90% of the run.
    pub fit_window: [f64; 2],
    /// Momentum axis and bin count for classical histograms.
    pub p_range: [f64; 2],
    pub p_bins: usize,
    pub write_wavefunction: bool,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            comb: true,
            breathing: true,
            diffusion: true,
            fit_window: [0.0, 0.0],
            p_range: [-80.0, 80.0],
            p_bins: 8000,
            write_wavefunction: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Dotted key path of a numeric config value, e.g. `physics.scaled.lambda`.
    pub path: String,
    pub values: Vec<f64>,
}

fn default_format_version() -> u32 {
    FORMAT_VERSION
}

fn default_name() -> String {
    "run".into()
}

fn default_pipeline() -> Pipeline {
    Pipeline::Quantum
}

fn default_mass() -> f64 {
    2.2e-25
}

fn default_gravity() -> f64 {
    STANDARD_GRAVITY
}

fn default_hbar() -> f64 {
    HBAR
}

/// Parse and validate config text with `overrides` (`path=value`) applied.
pub fn parse_config(text: &str, overrides: &[String]) -> Result<RunConfig> {
    let mut table: toml::Table = text.parse().map_err(|e| BouncerError::config(format!("{e}")))?;
    for item in overrides {
        apply_override(&mut table, item)?;
    }
    let config: RunConfig = RunConfig::deserialize(table).map_err(|e| BouncerError::config(format!("{e}")))?;
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: &Path, overrides: &[String]) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(BouncerError::io(path))?;
    parse_config(&text, overrides)
}

/// Parse the right-hand side of an override as a TOML value, falling back to
/// a bare string.
fn parse_value(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    match wrapped.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

pub(crate) fn apply_override(table: &mut toml::Table, item: &str) -> Result<()> {
    let (path, raw) = item
        .split_once('=')
        .ok_or_else(|| BouncerError::config(format!("override `{item}` is not of the form key=value")))?;
    let path = path.trim();
    let value = parse_value(raw.trim());
    info!("override {path} = {value}");
    set_path(table, path, value)
}

pub(crate) fn set_path(table: &mut toml::Table, path: &str, value: toml::Value) -> Result<()> {
    let mut keys: Vec<&str> = path.split('.').collect();
    let last = keys.pop().filter(|k| !k.is_empty()).ok_or_else(|| BouncerError::config("empty key path"))?;
    let mut cur = table;
    for (depth, key) in keys.iter().enumerate() {
        let entry = cur.entry(key.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| BouncerError::config(format!("{} is not a table", keys[..=depth].join("."))))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

pub(crate) fn get_path<'a>(table: &'a toml::Table, path: &str) -> Option<&'a toml::Value> {
    let mut keys = path.split('.');
    let mut val = table.get(keys.next()?)?;
    for key in keys {
        val = val.as_table()?.get(key)?;
    }
    Some(val)
}

fn check(ok: bool, path: &str, requirement: &str, value: impl std::fmt::Display) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(BouncerError::config(format!("{path}: must be {requirement} (got {value})")))
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        check(self.format_version == FORMAT_VERSION, "format_version", "1", self.format_version)?;
        check(!self.name.is_empty(), "name", "non-empty", "\"\"")?;
        match (&self.physics.lab, &self.physics.scaled) {
            (Some(_), Some(_)) => {
                return Err(BouncerError::config(
                    "both physics.lab and physics.scaled are given; exactly one is allowed",
                ))
            }
            (None, None) => {
                return Err(BouncerError::config("missing physics block: give physics.lab or physics.scaled"))
            }
            (Some(lab), None) => {
                for (key, v) in [
                    ("mass", lab.mass),
                    ("gravity", lab.gravity),
                    ("decay_wavenumber", lab.decay_wavenumber),
                    ("mod_frequency", lab.mod_frequency),
                    ("hbar", lab.hbar),
                ] {
                    check(v > 0.0 && v.is_finite(), &format!("physics.lab.{key}"), "finite and > 0", v)?;
                }
                for (key, v) in [("mod_amplitude", lab.mod_amplitude), ("rabi_eff", lab.rabi_eff)] {
                    check(v >= 0.0 && v.is_finite(), &format!("physics.lab.{key}"), "finite and >= 0", v)?;
                }
            }
            (None, Some(s)) => {
                check(s.v0 >= 0.0 && s.v0.is_finite(), "physics.scaled.v0", "finite and >= 0", s.v0)?;
                check(s.kappa > 0.0 && s.kappa.is_finite(), "physics.scaled.kappa", "finite and > 0", s.kappa)?;
                check(s.lambda >= 0.0 && s.lambda.is_finite(), "physics.scaled.lambda", "finite and >= 0", s.lambda)?;
                check(s.kbar > 0.0 && s.kbar.is_finite(), "physics.scaled.kbar", "finite and > 0", s.kbar)?;
            }
        }
        let c = &self.dynamics.classical;
        check(c.h > 0.0 && c.h.is_finite(), "dynamics.classical.h", "finite and > 0", c.h)?;
        check(c.force_tol > 0.0, "dynamics.classical.force_tol", "> 0", c.force_tol)?;
        check(c.accel_window >= 1, "dynamics.classical.accel_window", ">= 1", c.accel_window)?;
        let q = &self.dynamics.quantum;
        check(q.step > 0.0 && q.step.is_finite(), "dynamics.quantum.step", "finite and > 0", q.step)?;
        check(
            q.absorber_fraction > 0.0 && q.absorber_fraction < 1.0,
            "dynamics.quantum.absorber_fraction",
            "in (0, 1)",
            q.absorber_fraction,
        )?;
        check(q.guard_threshold > 0.0, "dynamics.quantum.guard_threshold", "> 0", q.guard_threshold)?;
        let e = &self.initial.ensemble;
        check(e.sigma_z > 0.0, "initial.ensemble.sigma_z", "> 0", e.sigma_z)?;
        check(e.sigma_p > 0.0, "initial.ensemble.sigma_p", "> 0", e.sigma_p)?;
        check(e.n >= 1, "initial.ensemble.n", ">= 1", e.n)?;
        check((0.0..=1.0).contains(&e.max_rejection), "initial.ensemble.max_rejection", "in [0, 1]", e.max_rejection)?;
        let w = &self.initial.wavepacket;
        check(w.delta_p > 0.0, "initial.wavepacket.delta_p", "> 0", w.delta_p)?;
        let g = &self.grid;
        check(g.z_max > g.z_min, "grid.z_max", "> grid.z_min", g.z_max)?;
        check(g.n_points >= 2 && g.n_points.is_power_of_two(), "grid.n_points", "a power of two >= 2", g.n_points)?;
        let s = &self.schedule;
        let t0 = if self.pipeline.classical() { e.t0 } else { 0.0 };
        check(s.t_end > t0 && s.t_end.is_finite(), "schedule.t_end", "finite and after the start time", s.t_end)?;
        check(s.sample_every > 0.0, "schedule.sample_every", "> 0", s.sample_every)?;
        check(
            s.snapshots.windows(2).all(|w| w[1] > w[0]),
            "schedule.snapshots",
            "strictly increasing",
            format!("{:?}", s.snapshots),
        )?;
        if let (Some(first), Some(last)) = (s.snapshots.first(), s.snapshots.last()) {
            check(
                *first >= t0 && *last <= s.t_end,
                "schedule.snapshots",
                "within the run",
                format!("{:?}", s.snapshots),
            )?;
        }
        let a = &self.analysis;
        check(a.p_range[1] > a.p_range[0], "analysis.p_range", "increasing", format!("{:?}", a.p_range))?;
        check(a.p_bins >= 2, "analysis.p_bins", ">= 2", a.p_bins)?;
        check(
            a.fit_window == [0.0, 0.0] || a.fit_window[1] > a.fit_window[0],
            "analysis.fit_window",
            "increasing",
            format!("{:?}", a.fit_window),
        )?;
        if self.pipeline.classical() && self.seed.is_none() {
            return Err(BouncerError::config("seed: required for ensemble runs"));
        }
        if let Some(sweep) = &self.sweep {
            check(!sweep.values.is_empty(), "sweep.values", "non-empty", "[]")?;
            let table = self.to_table()?;
            match get_path(&table, &sweep.path) {
                Some(toml::Value::Float(_)) | Some(toml::Value::Integer(_)) => {}
                Some(_) => return Err(BouncerError::config(format!("sweep.path: {} is not numeric", sweep.path))),
                None => return Err(BouncerError::config(format!("sweep.path: {} does not exist", sweep.path))),
            }
        }
        self.scaled_params()?;
        Ok(())
    }

    /// The dimensionless parameters, converting a lab block if needed.
    pub fn scaled_params(&self) -> Result<ScaledParams> {
        if let Some(s) = &self.physics.scaled {
            return Ok(ScaledParams::new(s.v0, s.kappa, s.lambda, s.kbar)?);
        }
        let lab = self.lab_params().ok_or_else(|| BouncerError::config("missing physics block"))?;
        Ok(to_dimensionless(&lab)?)
    }

    pub fn lab_params(&self) -> Option<LabParams> {
        self.physics.lab.map(|l| LabParams {
            mass: l.mass,
            gravity: l.gravity,
            decay_wavenumber: l.decay_wavenumber,
            mod_frequency: l.mod_frequency,
            mod_amplitude: l.mod_amplitude,
            rabi_eff: l.rabi_eff,
            hbar: l.hbar,
        })
    }

    pub fn backend(&self) -> Backend {
        let c = &self.dynamics.classical;
        match c.backend {
            BackendKind::HardWall => Backend::HardWall(BounceConfig::default()),
            BackendKind::Smooth => {
                Backend::Smooth(SmoothConfig { h: c.h, force_tol: c.force_tol, max_depth: c.max_depth })
            }
        }
    }

    pub fn criterion(&self) -> AccelCriterion {
        let c = &self.dynamics.classical;
        AccelCriterion { window: c.accel_window, threshold: c.accel_threshold }
    }

    pub fn gaussian(&self) -> GaussianSpec {
        let e = &self.initial.ensemble;
        GaussianSpec {
            mean_z: e.mean_z,
            mean_p: e.mean_p,
            sigma_z: e.sigma_z,
            sigma_p: e.sigma_p,
            t0: e.t0,
            max_rejection: e.max_rejection,
        }
    }

    pub fn spatial_grid(&self) -> Result<SpatialGrid> {
        Ok(SpatialGrid::new(self.grid.z_min, self.grid.z_max, self.grid.n_points)?)
    }

    pub fn absorber(&self) -> Option<Absorber> {
        let q = &self.dynamics.quantum;
        q.absorber.then_some(Absorber { fraction: q.absorber_fraction })
    }

    /// Fit window for power laws, resolving the `[0, 0]` default.
    pub fn fit_window(&self, t0: f64) -> (f64, f64) {
        match self.analysis.fit_window {
            [0.0, 0.0] => {
                let t_end = self.schedule.t_end;
                (t0 + 0.1 * (t_end - t0), t_end)
            }
            [lo, hi] => (lo, hi),
        }
    }

    /// Snapshot times with the final time appended.
    pub fn snapshot_times(&self) -> Vec<f64> {
        let mut times = self.schedule.snapshots.clone();
        if times.last().is_none_or(|&t| t < self.schedule.t_end) {
            times.push(self.schedule.t_end);
        }
        times
    }

    pub fn to_table(&self) -> Result<toml::Table> {
        toml::Table::try_from(self).map_err(|e| BouncerError::config(format!("serialize: {e}")))
    }

    /// Canonical TOML text with every default written out.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| BouncerError::config(format!("serialize: {e}")))
    }

    /// SHA-256 of the canonical text, excluding the output location.
    pub fn hash(&self) -> Result<String> {
        let mut c = self.clone();
        c.output_dir = None;
        let text = c.to_toml()?;
        Ok(hex::encode(Sha256::digest(text.as_bytes())))
    }

    /// Output directory, relative paths taken from [`OUTPUT_ROOT_ENV`] or the
    /// working directory.
    pub fn resolved_output_dir(&self) -> PathBuf {
        let dir = PathBuf::from(self.output_dir.clone().unwrap_or_else(|| self.name.clone()));
        if dir.is_absolute() {
            return dir;
        }
        match std::env::var_os(OUTPUT_ROOT_ENV) {
            Some(root) => PathBuf::from(root).join(dir),
            None => dir,
        }
    }

    /// Copy with the numeric value at `path` replaced.
    pub fn with_value(&self, path: &str, value: f64) -> Result<RunConfig> {
        let mut table = self.to_table()?;
        set_path(&mut table, path, toml::Value::Float(value))?;
        let c = RunConfig::deserialize(table).map_err(|e| BouncerError::config(format!("{path}: {e}")))?;
        c.validate()?;
        Ok(c)
    }
}

/// Highest point reached at `t_end` by an ideally accelerating orbit that
/// leaves the mirror at `p0` and gains π of momentum per bounce.
pub fn accelerated_turning_point(p0: f64, t_end: f64) -> f64 {
    let (mut t, mut p) = (0.0, p0.abs().max(PI));
    while t + 2.0 * p < t_end {
        t += 2.0 * p;
        p += PI;
    }
    0.5 * p * p
}
