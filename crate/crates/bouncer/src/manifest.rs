//! Run manifests. A directory holds a complete run exactly when its
//! `manifest.toml` exists, because the manifest is the last file written.

use std::collections::BTreeMap;
use std::path::Path;

use fermi_core::ScaledParams;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::FORMAT_VERSION;
use crate::error::{BouncerError, Result};

pub const MANIFEST_FILE: &str = "manifest.toml";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Complete,
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolvedParams {
    pub v0: f64,
    pub kappa: f64,
    pub lambda: f64,
    pub kbar: f64,
}

impl From<ScaledParams> for ResolvedParams {
    fn from(p: ScaledParams) -> Self {
        ResolvedParams { v0: p.v0, kappa: p.kappa, lambda: p.lambda, kbar: p.kbar }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    /// Path relative to the run directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
    /// Written by a run that stopped early.
    pub partial: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format_version: u32,
    pub name: String,
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub code_version: String,
    pub config_hash: String,
    pub wall_clock_seconds: f64,
    /// Integrator steps (quantum) or bounces (classical) taken.
    pub steps: u64,
    pub resolved_params: ResolvedParams,
    /// Headline numbers; NaN marks a diagnostic that produced no value.
    pub summary: BTreeMap<String, f64>,
    pub artifacts: Vec<Artifact>,
}

pub fn code_version() -> String {
    env!("CARGO_PKG_VERSION").to_string()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl RunManifest {
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| BouncerError::Manifest(format!("serialize: {e}")))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let m: RunManifest = toml::from_str(text).map_err(|e| BouncerError::Manifest(format!("{e}")))?;
        if m.format_version != FORMAT_VERSION {
            return Err(BouncerError::Manifest(format!("unsupported format_version {}", m.format_version)));
        }
        Ok(m)
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).map_err(BouncerError::io(&path))?;
        RunManifest::parse(&text)
    }

    /// Check every artifact against its recorded size and checksum.
    pub fn verify(&self, dir: &Path) -> Result<()> {
        for a in &self.artifacts {
            let path = dir.join(&a.path);
            let bytes = std::fs::read(&path).map_err(BouncerError::io(&path))?;
            if bytes.len() as u64 != a.bytes || sha256_hex(&bytes) != a.sha256 {
                return Err(BouncerError::Manifest(format!("checksum mismatch for {}", a.path)));
            }
        }
        Ok(())
    }

    pub fn summary_value(&self, key: &str) -> f64 {
        self.summary.get(key).copied().unwrap_or(f64::NAN)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RunManifest {
        RunManifest {
            format_version: FORMAT_VERSION,
            name: "t".into(),
            status: RunStatus::Failed,
            error: Some("diverged".into()),
            code_version: code_version(),
            config_hash: sha256_hex(b"x"),
            wall_clock_seconds: 1.5,
            steps: 10,
            resolved_params: ResolvedParams { v0: 1.0, kappa: 1.0, lambda: 1.7, kbar: 1.0 },
            summary: [("alpha".to_string(), f64::NAN), ("contrast".to_string(), 0.25)].into_iter().collect(),
            artifacts: vec![Artifact { path: "a.dat".into(), sha256: sha256_hex(b"abc"), bytes: 3, partial: true }],
        }
    }

    #[test]
    fn toml_round_trip() {
        let m = sample();
        let back = RunManifest::parse(&m.to_toml().unwrap()).unwrap();
        assert!(back.summary_value("alpha").is_nan());
        assert_eq!(back.summary_value("contrast"), 0.25);
        assert_eq!(back.artifacts, m.artifacts);
        assert_eq!(back.status, RunStatus::Failed);
    }

    #[test]
    fn verify_detects_edits() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.dat"), b"abc").unwrap();
        let m = sample();
        m.verify(dir.path()).unwrap();
        std::fs::write(dir.path().join("a.dat"), b"abd").unwrap();
        assert!(m.verify(dir.path()).is_err());
    }
}
