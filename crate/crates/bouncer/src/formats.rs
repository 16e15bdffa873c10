//! On-disk formats.
//!
//! Columnar text:
//!
//! ```text
//! # format_version = 1
//! # kind = moment_trace
//! # columns = t mean_z mean_p var_z var_p accel_fraction
//! 0.0000000000000000e0 ...
//! ```
//!
//! Numbers are written with 17 significant digits so a read gives back the
//! same `f64`. Wavefunction snapshots are a text header closed by an
//! `end_header` line, followed by little-endian `f64` pairs `(re, im)`.

use std::fmt::Write as _;
use std::path::Path;

use fermi_core::quantum::{SpatialGrid, WavepacketState};
use fermi_core::ScaledParams;
use num_complex::Complex64;

use crate::config::FORMAT_VERSION;
use crate::error::{BouncerError, Result};

/// A header-tagged table of `f64` columns.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Columnar {
    /// `key = value` header lines after `format_version`, in order.
    pub meta: Vec<(String, String)>,
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Columnar {
    pub fn new(kind: &str) -> Self {
        Columnar { meta: vec![("kind".into(), kind.into())], ..Default::default() }
    }

    pub fn meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.push((key.into(), value.to_string()));
        self
    }

    pub fn column(mut self, name: &str, values: Vec<f64>) -> Self {
        self.names.push(name.into());
        self.columns.push(values);
        self
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn get(&self, name: &str) -> Option<&[f64]> {
        self.names.iter().position(|n| n == name).map(|i| self.columns[i].as_slice())
    }

    pub fn meta_value(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn to_text(&self) -> String {
        let rows = self.rows();
        assert!(self.columns.iter().all(|c| c.len() == rows), "ragged columns");
        let mut out = String::with_capacity(64 + rows * self.columns.len() * 25);
        let _ = writeln!(out, "# format_version = {FORMAT_VERSION}");
        for (k, v) in &self.meta {
            let _ = writeln!(out, "# {k} = {v}");
        }
        let _ = writeln!(out, "# columns = {}", self.names.join(" "));
        for r in 0..rows {
            for (i, col) in self.columns.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                let _ = write!(out, "{:.16e}", col[r]);
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let bad = |reason: String| BouncerError::Format { path: path.into(), reason };
        let mut table = Columnar::default();
        let mut version = None;
        let mut have_columns = false;
        for (lineno, line) in text.lines().enumerate() {
            if let Some(rest) = line.strip_prefix('#') {
                let (k, v) =
                    rest.split_once('=').ok_or_else(|| bad(format!("line {}: header without `=`", lineno + 1)))?;
                let (k, v) = (k.trim(), v.trim());
                match k {
                    "format_version" => version = Some(v.to_string()),
                    "columns" => {
                        table.names = v.split_whitespace().map(String::from).collect();
                        table.columns = vec![Vec::new(); table.names.len()];
                        have_columns = true;
                    }
                    _ => table.meta.push((k.into(), v.into())),
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            if !have_columns {
                return Err(bad("data before the columns header".into()));
            }
            let mut n = 0;
            for (i, field) in line.split_whitespace().enumerate() {
                let col =
                    table.columns.get_mut(i).ok_or_else(|| bad(format!("line {}: too many fields", lineno + 1)))?;
                col.push(field.parse().map_err(|e| bad(format!("line {}: {e}", lineno + 1)))?);
                n += 1;
            }
            if n != table.names.len() {
                return Err(bad(format!("line {}: expected {} fields, got {n}", lineno + 1, table.names.len())));
            }
        }
        match version.as_deref() {
            Some(v) if v == FORMAT_VERSION.to_string() => {}
            Some(v) => return Err(bad(format!("unsupported format_version {v}"))),
            None => return Err(bad("missing format_version".into())),
        }
        if !have_columns {
            return Err(bad("missing columns header".into()));
        }
        Ok(table)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(BouncerError::io(path))?;
        Columnar::parse(&text, path)
    }
}

/// `key = value` report block with the standard version header.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct KeyValue {
    pub entries: Vec<(String, String)>,
}

impl KeyValue {
    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) {
        self.entries.push((key.into(), value.to_string()));
    }

    /// Write an optional float, `nan` when absent.
    pub fn push_opt(&mut self, key: impl Into<String>, value: Option<f64>) {
        self.push(key, fmt_f64(value.unwrap_or(f64::NAN)));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn get_f64(&self, key: &str) -> Option<f64> {
        self.get(key)?.parse().ok()
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("format_version = {FORMAT_VERSION}\n");
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut kv = KeyValue::default();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (k, v) = line.split_once('=').ok_or_else(|| BouncerError::Format {
                path: path.into(),
                reason: format!("line without `=`: {line}"),
            })?;
            let (k, v) = (k.trim(), v.trim());
            if k != "format_version" {
                kv.push(k, v);
            }
        }
        Ok(kv)
    }
}

/// 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Header of a wavefunction snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct WavefunctionHeader {
    pub grid: SpatialGrid,
    pub t: f64,
    pub params: ScaledParams,
    pub absorbed_norm: f64,
}

pub fn wavefunction_bytes(state: &WavepacketState) -> Vec<u8> {
    let g = &state.grid;
    let p = &state.params;
    let mut header = String::new();
    let _ = writeln!(header, "fermi-bouncer wavefunction");
    let _ = writeln!(header, "format_version = {FORMAT_VERSION}");
    let _ = writeln!(header, "encoding = f64-le interleaved re im");
    let _ = writeln!(header, "z_min = {}", fmt_f64(g.z_min));
    let _ = writeln!(header, "z_max = {}", fmt_f64(g.z_max));
    let _ = writeln!(header, "n_points = {}", g.n);
    let _ = writeln!(header, "t = {}", fmt_f64(state.t));
    let _ = writeln!(header, "v0 = {}", fmt_f64(p.v0));
    let _ = writeln!(header, "kappa = {}", fmt_f64(p.kappa));
    let _ = writeln!(header, "lambda = {}", fmt_f64(p.lambda));
    let _ = writeln!(header, "kbar = {}", fmt_f64(p.kbar));
    let _ = writeln!(header, "absorbed_norm = {}", fmt_f64(state.absorbed_norm));
    let _ = writeln!(header, "end_header");
    let mut bytes = header.into_bytes();
    bytes.reserve(16 * state.psi.len());
    for c in &state.psi {
        bytes.extend_from_slice(&c.re.to_le_bytes());
        bytes.extend_from_slice(&c.im.to_le_bytes());
    }
    bytes
}

pub fn parse_wavefunction(bytes: &[u8], path: &Path) -> Result<WavepacketState> {
    let bad = |reason: &str| BouncerError::Format { path: path.into(), reason: reason.into() };
    let marker = b"end_header\n";
    let end = bytes.windows(marker.len()).position(|w| w == marker).ok_or_else(|| bad("missing end_header"))?;
    let header = std::str::from_utf8(&bytes[..end]).map_err(|_| bad("header is not UTF-8"))?;
    let mut lines = header.lines();
    if lines.next() != Some("fermi-bouncer wavefunction") {
        return Err(bad("not a wavefunction file"));
    }
    let mut kv = std::collections::HashMap::new();
    for line in lines {
        let (k, v) = line.split_once('=').ok_or_else(|| bad("header line without `=`"))?;
        kv.insert(k.trim().to_string(), v.trim().to_string());
    }
    let num = |k: &str| -> Result<f64> {
        kv.get(k).and_then(|v| v.parse().ok()).ok_or_else(|| bad(&format!("missing or bad `{k}`")))
    };
    if kv.get("format_version").map(String::as_str) != Some(&FORMAT_VERSION.to_string()) {
        return Err(bad("unsupported format_version"));
    }
    let n = num("n_points")? as usize;
    let grid = SpatialGrid::new(num("z_min")?, num("z_max")?, n)?;
    let params = ScaledParams::new(num("v0")?, num("kappa")?, num("lambda")?, num("kbar")?)?;
    let data = &bytes[end + marker.len()..];
    if data.len() != 16 * n {
        return Err(bad("payload length does not match n_points"));
    }
    let f = |b: &[u8]| f64::from_le_bytes(b.try_into().expect("8-byte chunk"));
    let psi = data.chunks_exact(16).map(|c| Complex64::new(f(&c[..8]), f(&c[8..]))).collect();
    Ok(WavepacketState { grid, psi, t: num("t")?, params, absorbed_norm: num("absorbed_norm")? })
}

pub fn read_wavefunction(path: &Path) -> Result<WavepacketState> {
    let bytes = std::fs::read(path).map_err(BouncerError::io(path))?;
    parse_wavefunction(&bytes, path)
}
