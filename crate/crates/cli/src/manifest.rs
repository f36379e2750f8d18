//! Run manifests: enough to re-run a command and check its outputs.
//!
//! Single-output commands write a sidecar `<output>.manifest.json`;
//! `analyze` writes `manifest.json` inside its output directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::Context;
use serde::{Deserialize, Serialize};

pub const MANIFEST_SCHEMA: u32 = 1;
/// Bumped whenever a CSV header or column meaning changes.
pub const CSV_SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub path: String,
    pub kind: String,
    /// CSV columns holding wall-clock values, skipped by `replay --verify`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub volatile_columns: Vec<String>,
}

impl OutputRecord {
    pub fn new(path: &Path, kind: &str) -> Self {
        Self {
            path: path.display().to_string(),
            kind: kind.into(),
            volatile_columns: Vec::new(),
        }
    }

    pub fn volatile(mut self, cols: &[&str]) -> Self {
        self.volatile_columns = cols.iter().map(|c| c.to_string()).collect();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: u32,
    pub csv_schema: u32,
    pub tool_version: String,
    pub core_version: String,
    pub command: String,
    pub argv: Vec<String>,
    pub cwd: String,
    pub config: Option<String>,
    pub seeds: BTreeMap<String, u64>,
    pub settings: BTreeMap<String, String>,
    pub outputs: Vec<OutputRecord>,
    pub started_unix_ms: u64,
    pub wall_ms: u64,
}

impl Manifest {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))
    }
}

pub fn sidecar(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// What was asked for and when; turned into a manifest once outputs exist.
#[derive(Debug)]
pub struct Invocation {
    argv: Vec<String>,
    cwd: PathBuf,
    started_unix_ms: u64,
    started: Instant,
}

/// Per-command content of a manifest.
#[derive(Debug, Default)]
pub struct Record {
    pub config: Option<String>,
    pub seeds: BTreeMap<String, u64>,
    pub settings: BTreeMap<String, String>,
    pub outputs: Vec<OutputRecord>,
}

impl Record {
    pub fn seed(mut self, name: &str, v: u64) -> Self {
        self.seeds.insert(name.into(), v);
        self
    }

    pub fn set(mut self, key: &str, v: impl ToString) -> Self {
        self.settings.insert(key.into(), v.to_string());
        self
    }

    pub fn output(mut self, o: OutputRecord) -> Self {
        self.outputs.push(o);
        self
    }
}

impl Invocation {
    pub fn capture(argv: &[String]) -> anyhow::Result<Self> {
        let started_unix_ms = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or(0);
        Ok(Self {
            argv: argv.to_vec(),
            cwd: std::env::current_dir().context("reading working directory")?,
            started_unix_ms,
            started: Instant::now(),
        })
    }

    pub fn elapsed_ms(&self) -> u64 {
        self.started.elapsed().as_millis() as u64
    }

    pub fn write(self, command: &str, rec: Record, path: &Path) -> anyhow::Result<()> {
        let m = Manifest {
            schema: MANIFEST_SCHEMA,
            csv_schema: CSV_SCHEMA,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            core_version: halftone_core::VERSION.into(),
            command: command.into(),
            argv: self.argv.clone(),
            cwd: self.cwd.display().to_string(),
            config: rec.config,
            seeds: rec.seeds,
            settings: rec.settings,
            outputs: rec.outputs,
            started_unix_ms: self.started_unix_ms,
            wall_ms: self.elapsed_ms(),
        };
        let text = serde_json::to_string_pretty(&m)? + "\n";
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
    }
}
