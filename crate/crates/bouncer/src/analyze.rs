//! Re-derive diagnostics from the artifacts of a finished run.

use std::path::Path;

use crate::analysis::{breathing_report, comb_report, diffusion_report, histogram_interior, profile_from_table};
use crate::config::RunConfig;
use crate::error::{BouncerError, Result};
use crate::formats::{Columnar, KeyValue};
use crate::manifest::RunManifest;

/// Last artifact matching `prefix_NNN.dat`, by index.
fn last_indexed(manifest: &RunManifest, prefix: &str) -> Option<String> {
    manifest
        .artifacts
        .iter()
        .map(|a| a.path.as_str())
        .filter(|p| p.strip_prefix(prefix).is_some_and(|rest| rest.ends_with(".dat")))
        .max()
        .map(String::from)
}

/// Verify the run in `dir` and recompute its diagnostics.
pub fn analyze_dir(dir: &Path) -> Result<KeyValue> {
    let manifest = RunManifest::read(dir)?;
    manifest.verify(dir)?;
    let config_path = dir.join(crate::run::CONFIG_FILE);
    let config = crate::config::load_config(&config_path, &[])?;
    let mut kv = KeyValue::default();
    kv.push("name", &manifest.name);
    kv.push("status", format!("{:?}", manifest.status).to_lowercase());
    kv.push("config_hash", &manifest.config_hash);
    kv.push("checksums", "verified");
    let has = |name: &str| manifest.artifacts.iter().any(|a| a.path == name);
    if has("classical_trace.dat") {
        classical(dir, &manifest, &config, &mut kv)?;
    }
    if has("quantum_series.dat") {
        quantum(dir, &manifest, &config, &mut kv)?;
    }
    Ok(kv)
}

fn column<'a>(t: &'a Columnar, name: &str, path: &Path) -> Result<&'a [f64]> {
    t.get(name).ok_or_else(|| BouncerError::Format { path: path.into(), reason: format!("missing column {name}") })
}

fn classical(dir: &Path, manifest: &RunManifest, config: &RunConfig, kv: &mut KeyValue) -> Result<()> {
    let path = dir.join("classical_trace.dat");
    let trace = Columnar::read(&path)?;
    let t = column(&trace, "t", &path)?;
    let var_p = column(&trace, "var_p", &path)?;
    let spread: Vec<f64> = column(&trace, "var_z", &path)?.iter().map(|v| v.sqrt()).collect();
    let accel = column(&trace, "accel_fraction", &path)?;
    let mut sub = KeyValue::default();
    sub.push_opt("accel_fraction", accel.last().copied());
    if let Some(name) = last_indexed(manifest, "classical_p_hist_") {
        let table = Columnar::read(&dir.join(&name))?;
        if let Some(profile) = profile_from_table(&table, "p") {
            comb_report(&mut sub, "p_comb", &histogram_interior(&profile));
        }
    }
    let window = config.fit_window(t.first().copied().unwrap_or(0.0));
    diffusion_report(&mut sub, "diffusion", t, var_p, window);
    breathing_report(&mut sub, "breathing", t, var_p, &spread, window);
    for (k, v) in sub.entries {
        kv.push(format!("classical.{k}"), v);
    }
    Ok(())
}

fn quantum(dir: &Path, manifest: &RunManifest, config: &RunConfig, kv: &mut KeyValue) -> Result<()> {
    let path = dir.join("quantum_series.dat");
    let series = Columnar::read(&path)?;
    let t = column(&series, "t", &path)?;
    let var_p = column(&series, "var_p", &path)?;
    let delta_z = column(&series, "delta_z", &path)?;
    let mut sub = KeyValue::default();
    sub.push_opt("final_norm", series.get("norm").and_then(|n| n.last().copied()));
    for (prefix, axis, key) in [("quantum_p_marginal_", "p", "p_comb"), ("quantum_z_marginal_", "z", "z_comb")] {
        if let Some(name) = last_indexed(manifest, prefix) {
            let table = Columnar::read(&dir.join(&name))?;
            if let Some(profile) = profile_from_table(&table, axis) {
                comb_report(&mut sub, key, &profile);
            }
        }
    }
    let window = config.fit_window(t.first().copied().unwrap_or(0.0));
    diffusion_report(&mut sub, "diffusion", t, var_p, window);
    breathing_report(&mut sub, "breathing", t, var_p, delta_z, window);
    for (k, v) in sub.entries {
        kv.push(format!("quantum.{k}"), v);
    }
    Ok(())
}
