//! JSON documents written by the CLI, and a reader for them.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use lppl_core::{to_amplitude_phase, FitConfig, FitResult, ModelParams, SuperBubbleReport};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Provenance record written next to every output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    /// RFC 3339, UTC.
    pub timestamp: String,
    pub input: Option<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub config: serde_json::Value,
}

/// SHA-256 of a file's bytes, hex encoded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

impl FileDigest {
    pub fn of(path: &Path, bytes: &[u8]) -> Self {
        Self {
            path: path.display().to_string(),
            sha256: sha256_hex(bytes),
        }
    }
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value, input: Option<FileDigest>) -> Self {
        Self {
            command: command.into(),
            tool_version: VERSION.into(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            input,
            outputs: Vec::new(),
            config,
        }
    }

    /// Writes `bytes` to `path` and records its digest.
    pub fn write_output(&mut self, path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
        fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))?;
        self.outputs.push(FileDigest::of(path, bytes));
        Ok(())
    }

    pub fn save(&self, path: &Path) -> anyhow::Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        fs::write(path, json + "\n").with_context(|| format!("cannot write {}", path.display()))
    }
}

/// `<file>.manifest.json` beside a single output file.
pub fn sidecar_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    output.with_file_name(name)
}

/// Model parameters in both the linear `(c, d)` and the `(B, phi)` form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamsReport {
    #[serde(flatten)]
    pub params: ModelParams,
    pub amplitude: f64,
    pub phase: f64,
    pub omega: f64,
}

impl From<ModelParams> for ParamsReport {
    fn from(params: ModelParams) -> Self {
        let (amplitude, phase) = to_amplitude_phase(&params);
        Self {
            params,
            amplitude,
            phase,
            omega: params.omega(),
        }
    }
}

/// A fit without its objective trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub params: ParamsReport,
    pub rmse: f64,
    pub sse: f64,
    pub n_points: usize,
    pub degenerate: bool,
    pub grid_nodes: usize,
}

impl From<&FitResult> for FitSummary {
    fn from(f: &FitResult) -> Self {
        Self {
            params: f.params.into(),
            rmse: f.rmse,
            sse: f.sse,
            n_points: f.n_points,
            degenerate: f.degenerate,
            grid_nodes: f.objective_trace.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub label: String,
    pub config: FitConfig,
    pub fit: FitSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuperBubbleDocument {
    pub long_config: FitConfig,
    pub short_config: FitConfig,
    pub long_fit: FitSummary,
    pub short_fit: FitSummary,
    pub is_superbubble: bool,
    pub gap_years: f64,
    pub short_rel_rmse: f64,
    pub sse_ratio: f64,
    pub thresholds: lppl_core::SuperBubbleThresholds,
}

impl SuperBubbleDocument {
    pub fn new(long_config: FitConfig, short_config: FitConfig, r: &SuperBubbleReport) -> Self {
        Self {
            long_config,
            short_config,
            long_fit: (&r.long_fit).into(),
            short_fit: (&r.short_fit).into(),
            is_superbubble: r.is_superbubble,
            gap_years: r.gap_years,
            short_rel_rmse: r.short_rel_rmse,
            sse_ratio: r.sse_ratio,
            thresholds: r.thresholds,
        }
    }
}

pub fn to_json<T: Serialize>(doc: &T) -> anyhow::Result<String> {
    Ok(serde_json::to_string_pretty(doc)? + "\n")
}

pub fn read_fit_report(path: &Path) -> anyhow::Result<FitReport> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("{} is not a fit report", path.display()))
}
