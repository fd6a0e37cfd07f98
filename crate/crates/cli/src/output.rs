//! Deterministic CSV and manifest emission.
//!
//! Floats print with 12 significant digits, rows carry no wall-clock data,
//! and files land atomically (write to a temporary sibling, then rename), so
//! identical configs produce byte-identical artifacts.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::FileConfig;

/// 12-significant-digit scientific form, stable across runs.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:.11e}")
    }
}

/// Write `content` to `path` atomically.
pub fn write_atomic(path: &Path, content: &str) -> std::io::Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name().map(|s| s.to_string_lossy()).unwrap_or_default()
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(content.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// A CSV under construction: header plus LF-terminated rows.
pub struct Csv {
    header: String,
    rows: Vec<String>,
}

impl Csv {
    pub fn new(header: &str) -> Self {
        Self {
            header: header.to_string(),
            rows: Vec::new(),
        }
    }

    pub fn push_row(&mut self, fields: &[String]) {
        self.rows.push(fields.join(","));
    }

    pub fn render(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(&self.header);
        out.push('\n');
        for row in &self.rows {
            out.push_str(row);
            out.push('\n');
        }
        out
    }
}

/// Convergence diagnostics of one run, flagged when the step-halving delta
/// exceeds its gate.
#[derive(Debug, Clone, Serialize)]
pub struct RunDiagnostics {
    pub key: String,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step_halving_delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quad_refinement_delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub norm_drift_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_gap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub substeps: Option<usize>,
    pub flagged: bool,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: ToolInfo,
    pub config: FileConfig,
    pub convergence_gate: f64,
    pub runs: Vec<RunDiagnostics>,
}

#[derive(Debug, Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

impl Manifest {
    pub fn new(config: FileConfig, runs: Vec<RunDiagnostics>) -> Self {
        Self {
            tool: ToolInfo {
                name: "qbsim",
                version: env!("CARGO_PKG_VERSION"),
            },
            config,
            convergence_gate: qbsim_core::tol::STEP_HALVING_FLAG,
            runs,
        }
    }
}

/// Write the CSV and its manifest side by side; returns the manifest path.
pub fn emit(
    out_dir: &Path,
    stem: &str,
    csv: &Csv,
    manifest: &Manifest,
) -> std::io::Result<(PathBuf, PathBuf)> {
    let csv_path = out_dir.join(format!("{stem}.csv"));
    let manifest_path = out_dir.join(format!("{stem}.manifest.json"));
    write_atomic(&csv_path, &csv.render())?;
    let mut body = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    body.push('\n');
    write_atomic(&manifest_path, &body)?;
    Ok((csv_path, manifest_path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting_is_12_digits() {
        assert_eq!(fmt_f64(0.5), "5.00000000000e-1");
        assert_eq!(fmt_f64(1.0 / 3.0), "3.33333333333e-1");
        assert_eq!(fmt_f64(-2.0), "-2.00000000000e0");
    }

    #[test]
    fn csv_renders_lf_only() {
        let mut csv = Csv::new("a,b");
        csv.push_row(&["1".into(), "2".into()]);
        assert_eq!(csv.render(), "a,b\n1,2\n");
    }
}
