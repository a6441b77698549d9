//! Output files: manifests, CSV documents and matrices, all written atomically.

use std::path::{Path, PathBuf};

use mdnmf::io::{write_bytes_atomic, write_matrix};
use ndarray::Array2;
use serde::Serialize;
use serde_json::Value;

use crate::error::CliResult;

/// Everything needed to rerun a command: its arguments, the resolved configuration and seed.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub version: &'static str,
    pub args: Vec<String>,
    pub seed: u64,
    pub config: Value,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<String>,
    pub details: Value,
}

impl Manifest {
    pub fn new(command: &str, seed: u64) -> Self {
        Manifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION"),
            args: std::env::args().skip(1).collect(),
            seed,
            config: Value::Null,
            inputs: Vec::new(),
            outputs: Vec::new(),
            details: Value::Null,
        }
    }
}

/// Collects the files a command writes into one directory.
pub struct OutDir {
    dir: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    pub fn create(dir: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(dir).map_err(|e| mdnmf::Error::Io { path: dir.to_path_buf(), source: e })?;
        Ok(OutDir { dir: dir.to_path_buf(), written: Vec::new() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn record(&mut self, name: &str) -> PathBuf {
        self.written.push(name.to_string());
        self.path(name)
    }

    pub fn bytes(&mut self, name: &str, bytes: &[u8]) -> CliResult<()> {
        let p = self.record(name);
        write_bytes_atomic(&p, bytes)?;
        Ok(())
    }

    pub fn matrix(&mut self, name: &str, m: &Array2<f64>) -> CliResult<()> {
        let p = self.record(name);
        write_matrix(&p, m)?;
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.bytes(name, text.as_bytes())
    }

    /// Reserves a name for a file written by other means.
    pub fn external(&mut self, name: &str) -> PathBuf {
        self.record(name)
    }

    /// Writes `manifest.json` listing every file written so far.
    pub fn finish(mut self, mut manifest: Manifest) -> CliResult<()> {
        manifest.outputs = std::mem::take(&mut self.written);
        self.json("manifest.json", &manifest)
    }
}

/// Renders rows with the csv crate.
pub fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.into_inner().map_err(|e| e.into_error().into())
}

pub fn fmt_stat(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v:.6}")
    }
}
