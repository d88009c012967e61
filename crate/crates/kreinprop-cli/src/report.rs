//! Run reports, CSV tables and the output-file manifest.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ScenarioConfig;
use crate::model::ModelInfo;

/// One pass/fail comparison.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    /// Registry key.
    pub key: &'static str,
    /// Distinguishes repeated evaluations of the same key (a z value, an ordering).
    pub label: String,
    pub output: &'static str,
    pub value: f64,
    pub tol: f64,
    pub pass: bool,
    /// Reported for comparison, never counted as a failure.
    pub informational: bool,
}

impl Check {
    pub fn new(key: &'static str, output: &'static str, value: f64, tol: f64) -> Self {
        Check { key, label: String::new(), output, value, tol, pass: value.is_finite() && value <= tol, informational: false }
    }

    pub fn with_pass(mut self, pass: bool) -> Self {
        self.pass = pass;
        self
    }

    pub fn labelled(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn informational(mut self) -> Self {
        self.informational = true;
        self
    }

    pub fn failed(&self) -> bool {
        !self.pass && !self.informational
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ManifestEntry {
    pub path: String,
    pub output: &'static str,
    /// SHA-256 of the file; `None` when nothing was written (`--out -`).
    pub sha256: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct OutputError {
    pub output: &'static str,
    pub message: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub checks: usize,
    pub failed: usize,
    pub errors: usize,
    pub all_pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Timing {
    pub total_ms: u128,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub tool_version: &'static str,
    pub config: ScenarioConfig,
    pub model: Option<ModelInfo>,
    pub checks: Vec<Check>,
    /// Detailed per-output results keyed by output name.
    pub sections: serde_json::Map<String, serde_json::Value>,
    pub manifest: Vec<ManifestEntry>,
    pub errors: Vec<OutputError>,
    pub summary: Summary,
    pub timing: Timing,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        if !self.errors.is_empty() {
            3
        } else if self.summary.all_pass {
            0
        } else {
            1
        }
    }
}

/// Where files go: a directory, or nowhere when the report is streamed to stdout.
#[derive(Clone, Debug)]
pub enum Sink {
    Dir(PathBuf),
    Stdout,
}

impl Sink {
    pub fn dir(&self) -> Option<&Path> {
        match self {
            Sink::Dir(p) => Some(p),
            Sink::Stdout => None,
        }
    }
}

/// Writes `bytes` under the sink and records the file in the manifest.
pub fn emit(sink: &Sink, manifest: &mut Vec<ManifestEntry>, output: &'static str, rel: &str, bytes: &[u8]) -> std::io::Result<()> {
    let sha256 = match sink.dir() {
        Some(dir) => {
            let path = dir.join(rel);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::File::create(&path)?.write_all(bytes)?;
            Some(hex::encode(Sha256::digest(bytes)))
        }
        None => None,
    };
    manifest.push(ManifestEntry { path: rel.to_string(), output, sha256 });
    Ok(())
}

/// CSV text from a header and rows.
pub fn csv_text<R: AsRef<[String]>>(header: &[&str], rows: impl IntoIterator<Item = R>) -> std::io::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r.as_ref())?;
    }
    w.into_inner().map_err(|e| e.into_error())
}

pub fn checks_csv(checks: &[Check]) -> std::io::Result<Vec<u8>> {
    csv_text(
        &["key", "label", "output", "value", "tol", "pass", "informational"],
        checks.iter().map(|c| {
            vec![
                c.key.to_string(),
                c.label.clone(),
                c.output.to_string(),
                format!("{:e}", c.value),
                format!("{:e}", c.tol),
                c.pass.to_string(),
                c.informational.to_string(),
            ]
        }),
    )
}
