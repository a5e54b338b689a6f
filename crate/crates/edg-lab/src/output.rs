//! Artifact writers: CSV tables, JSON payloads and the run manifest.
//!
//! Payload files are deterministic functions of the config. Wall-clock data
//! appears only in `manifest.json`.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::{LabError, LabResult};

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// A table of numeric columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Self { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> LabResult<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let ser = |e: csv::Error| LabError::Serialize(e.to_string());
        w.write_record(&self.header).map_err(ser)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| fmt_f64(*v))).map_err(ser)?;
        }
        w.into_inner().map_err(|e| LabError::Serialize(e.to_string()))
    }
}

pub fn to_json<T: Serialize>(value: &T) -> LabResult<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value).map_err(|e| LabError::Serialize(e.to_string()))?;
    v.push(b'\n');
    Ok(v)
}

#[derive(Debug, Serialize)]
struct FileEntry {
    name: String,
    bytes: usize,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    schema_version: u32,
    tool: &'static str,
    version: &'static str,
    config_hash: String,
    config: &'a ExperimentConfig,
    created_unix_seconds: u64,
    elapsed_seconds: f64,
    files: Vec<FileEntry>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    timings: Vec<(String, f64)>,
}

/// Collects the files of one run and writes them with a manifest.
#[derive(Debug)]
pub struct ArtifactSet {
    dir: PathBuf,
    files: Vec<(String, Vec<u8>)>,
    timings: Vec<(String, f64)>,
}

impl ArtifactSet {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self {
            dir: dir.into(),
            files: Vec::new(),
            timings: Vec::new(),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    pub fn add_table(&mut self, name: &str, table: &Table) -> LabResult<()> {
        let b = table.to_csv()?;
        self.add(name, b);
        Ok(())
    }

    pub fn add_json<T: Serialize>(&mut self, name: &str, value: &T) -> LabResult<()> {
        let b = to_json(value)?;
        self.add(name, b);
        Ok(())
    }

    /// Wall-clock timing, recorded in the manifest only.
    pub fn timing(&mut self, label: impl Into<String>, seconds: f64) {
        self.timings.push((label.into(), seconds));
    }

    pub fn write(self, cfg: &ExperimentConfig, elapsed_seconds: f64) -> LabResult<Vec<PathBuf>> {
        fs::create_dir_all(&self.dir).map_err(|e| LabError::io(&self.dir, e))?;
        let mut written = Vec::new();
        let mut entries = Vec::new();
        for (name, bytes) in &self.files {
            let p = self.dir.join(name);
            fs::write(&p, bytes).map_err(|e| LabError::io(&p, e))?;
            entries.push(FileEntry {
                name: name.clone(),
                bytes: bytes.len(),
                sha256: hex::encode(Sha256::digest(bytes)),
            });
            written.push(p);
        }
        let created = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let m = Manifest {
            schema_version: crate::config::SCHEMA_VERSION,
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            config_hash: cfg.hash(),
            config: cfg,
            created_unix_seconds: created,
            elapsed_seconds,
            files: entries,
            timings: self.timings,
        };
        let p = self.dir.join("manifest.json");
        fs::write(&p, to_json(&m)?).map_err(|e| LabError::io(&p, e))?;
        written.push(p);
        Ok(written)
    }
}
