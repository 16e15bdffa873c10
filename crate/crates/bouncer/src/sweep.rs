//! Parameter sweeps: one child run per value, executed on a worker pool, then
//! reduced in axis order into an aggregate table.

use std::path::{Path, PathBuf};

use fermi_core::windows::classify;
use fermi_core::HalfIndex;
use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, FORMAT_VERSION};
use crate::error::{BouncerError, Result};
use crate::formats::Columnar;
use crate::manifest::{sha256_hex, RunManifest};
use crate::run::{run_in, RunOutcome};

pub const AGGREGATE_FILE: &str = "aggregate.dat";
pub const SWEEP_MANIFEST_FILE: &str = "sweep_manifest.toml";

/// Aggregate columns after `index` and `value`.
pub const AGGREGATE_COLUMNS: [&str; 9] = [
    "ok",
    "lambda",
    "window_twice_s",
    "accel_fraction",
    "comb_contrast",
    "comb_spacing",
    "alpha",
    "alpha_r2",
    "breathing_correlation",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub index: usize,
    pub value: f64,
    pub run_dir: String,
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepManifest {
    pub format_version: u32,
    pub name: String,
    pub path: String,
    pub config_hash: String,
    pub aggregate_sha256: String,
    pub rows: Vec<SweepRow>,
}

impl SweepManifest {
    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(SWEEP_MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).map_err(BouncerError::io(&path))?;
        toml::from_str(&text).map_err(|e| BouncerError::Manifest(format!("{e}")))
    }

    pub fn verify(&self, dir: &Path) -> Result<()> {
        let path = dir.join(AGGREGATE_FILE);
        let bytes = std::fs::read(&path).map_err(BouncerError::io(&path))?;
        if sha256_hex(&bytes) != self.aggregate_sha256 {
            return Err(BouncerError::Manifest(format!("checksum mismatch for {AGGREGATE_FILE}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub dir: PathBuf,
    pub manifest: SweepManifest,
    pub aggregate: Columnar,
}

impl SweepResult {
    pub fn all_succeeded(&self) -> bool {
        self.manifest.rows.iter().all(|r| r.status == "complete")
    }
}

/// The child configs of a sweep, in axis order.
pub fn child_configs(base: &RunConfig, dir: &Path) -> Result<Vec<RunConfig>> {
    let sweep = base.sweep.as_ref().ok_or_else(|| BouncerError::config("sweep: missing [sweep] block"))?;
    sweep
        .values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let mut child = base.with_value(&sweep.path, v)?;
            child.sweep = None;
            child.name = format!("{}-{i:03}", base.name);
            child.output_dir = Some(dir.join("runs").join(format!("{i:03}")).to_string_lossy().into_owned());
            Ok(child)
        })
        .collect()
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension(format!("tmp-{}", std::process::id()));
    std::fs::write(&tmp, bytes).map_err(BouncerError::io(&tmp))?;
    std::fs::rename(&tmp, path).map_err(BouncerError::io(path))
}

/// Row of the aggregate table for one child; NaN where a value is missing.
fn aggregate_row(child: &RunConfig, manifest: Option<&RunManifest>) -> [f64; 9] {
    let nan = f64::NAN;
    let lambda = child.scaled_params().map_or(nan, |p| p.lambda);
    let window = classify(lambda, HalfIndex::from_twice(1000), false).map_or(-1.0, |w| w.s.twice() as f64);
    let Some(m) = manifest else {
        return [0.0, lambda, window, nan, nan, nan, nan, nan, nan];
    };
    let pick = |key: &str| {
        let q = m.summary_value(&format!("quantum_{key}"));
        if m.summary.contains_key(&format!("quantum_{key}")) {
            q
        } else {
            m.summary_value(&format!("classical_{key}"))
        }
    };
    [
        (m.status == crate::manifest::RunStatus::Complete) as u8 as f64,
        lambda,
        window,
        m.summary_value("classical_accel_fraction"),
        pick("comb_contrast"),
        pick("comb_spacing"),
        pick("alpha"),
        pick("alpha_r2"),
        pick("breathing_correlation"),
    ]
}

/// Run every child of `base` with `workers` threads and write the aggregate.
///
/// The aggregate depends only on the children's results, never on timing or
/// completion order.
pub fn sweep(base: &RunConfig, workers: usize, force: bool) -> Result<SweepResult> {
    base.validate()?;
    let sweep = base.sweep.clone().ok_or_else(|| BouncerError::config("sweep: missing [sweep] block"))?;
    let dir = base.resolved_output_dir();
    std::fs::create_dir_all(&dir).map_err(BouncerError::io(&dir))?;
    let children = child_configs(base, &dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| BouncerError::config(format!("workers: {e}")))?;
    let outcomes: Vec<Result<RunOutcome>> = pool.install(|| {
        children.par_iter().map(|c| run_in(c, Path::new(c.output_dir.as_deref().unwrap_or_default()), force)).collect()
    });

    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); 2 + AGGREGATE_COLUMNS.len()];
    let mut rows = Vec::new();
    for (i, ((child, outcome), &value)) in children.iter().zip(&outcomes).zip(&sweep.values).enumerate() {
        let (manifest, status, error) = match outcome {
            Ok(o) => {
                let m = o.manifest();
                let status = if o.succeeded() { "complete" } else { "failed" };
                (Some(m), status, m.error.clone())
            }
            Err(e) => {
                warn!("sweep row {i} failed: {e}");
                (None, "failed", Some(e.to_string()))
            }
        };
        let row = aggregate_row(child, manifest);
        columns[0].push(i as f64);
        columns[1].push(value);
        for (col, v) in columns[2..].iter_mut().zip(row) {
            col.push(v);
        }
        rows.push(SweepRow { index: i, value, run_dir: format!("runs/{i:03}"), status: status.into(), error });
    }
    let mut table = Columnar::new("sweep_aggregate").meta("path", &sweep.path);
    let mut cols = columns.into_iter();
    table = table.column("index", cols.next().unwrap_or_default());
    table = table.column("value", cols.next().unwrap_or_default());
    for (name, col) in AGGREGATE_COLUMNS.iter().zip(cols) {
        table = table.column(name, col);
    }
    let text = table.to_text();
    write_atomic(&dir.join(AGGREGATE_FILE), text.as_bytes())?;
    let manifest = SweepManifest {
        format_version: FORMAT_VERSION,
        name: base.name.clone(),
        path: sweep.path.clone(),
        config_hash: base.hash()?,
        aggregate_sha256: sha256_hex(text.as_bytes()),
        rows,
    };
    let mtext = toml::to_string(&manifest).map_err(|e| BouncerError::Manifest(format!("serialize: {e}")))?;
    write_atomic(&dir.join(SWEEP_MANIFEST_FILE), mtext.as_bytes())?;
    Ok(SweepResult { dir, manifest, aggregate: table })
}

/// Header line for the window column: `2s`, or -1 outside every window.
pub fn window_label(twice_s: f64) -> String {
    if twice_s < 0.0 {
        "outside".into()
    } else {
        let s = HalfIndex::from_twice(twice_s as u32);
        format!("s={s}")
    }
}
