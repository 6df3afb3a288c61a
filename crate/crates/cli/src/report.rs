//! CSV, JSON and manifest writers. Every file is rendered in memory and
//! written once, so reruns with the same inputs produce identical bytes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;
pub const RUN_MANIFEST_FILE: &str = "run_manifest.json";

/// Shortest decimal string that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:?}")
    }
}

/// Minimal CSV builder for numeric tables (no quoting needed).
#[derive(Debug, Clone)]
pub struct Csv {
    columns: usize,
    text: String,
}

#[derive(Debug, Clone, Copy)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Bool(bool),
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Self {
            columns: header.len(),
            text,
        }
    }

    pub fn row(&mut self, cells: &[Cell]) {
        assert_eq!(cells.len(), self.columns, "row width");
        for (i, c) in cells.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            match *c {
                Cell::Int(v) => write!(self.text, "{v}").unwrap(),
                Cell::Float(v) => self.text.push_str(&fmt_f64(v)),
                Cell::Bool(v) => self.text.push_str(if v { "true" } else { "false" }),
            }
        }
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

/// Deterministic part of the run record, embedded in every report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportManifest {
    pub config_hash: String,
    pub version: String,
    pub master_seed: u64,
    pub command: String,
    pub exit_status: i32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommandRecord {
    pub exit_status: i32,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
}

/// `run_manifest.json`: the only artifact carrying wall-clock timestamps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub version: String,
    pub master_seed: u64,
    pub commands: std::collections::BTreeMap<String, CommandRecord>,
}

pub fn unix_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis())
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn write_text(dir: &Path, name: &str, text: &str) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report is serializable");
    s.push('\n');
    s
}

/// Merges one command's record into the run manifest in `dir`. A manifest
/// written for a different configuration is replaced.
pub fn update_run_manifest(
    dir: &Path,
    base: &ReportManifest,
    started: u128,
) -> Result<(), CliError> {
    let path = dir.join(RUN_MANIFEST_FILE);
    let existing = std::fs::read_to_string(&path)
        .ok()
        .and_then(|t| serde_json::from_str::<RunManifest>(&t).ok())
        .filter(|m| m.config_hash == base.config_hash && m.master_seed == base.master_seed);
    let mut manifest = existing.unwrap_or_else(|| RunManifest {
        config_hash: base.config_hash.clone(),
        version: base.version.clone(),
        master_seed: base.master_seed,
        commands: Default::default(),
    });
    manifest.commands.insert(
        base.command.clone(),
        CommandRecord {
            exit_status: base.exit_status,
            started_unix_ms: started,
            finished_unix_ms: unix_ms(),
        },
    );
    write_text(dir, RUN_MANIFEST_FILE, &to_json(&manifest)).map(|_| ())
}
