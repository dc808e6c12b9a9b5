//! Reproducibility manifest written next to every run's outputs.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use sbmt::preprocess::Thresholds;
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct ThresholdRecord {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub edge_length: f64,
}

impl From<Thresholds> for ThresholdRecord {
    fn from(t: Thresholds) -> Self {
        Self { a: t.a, b: t.b, c: t.c, edge_length: t.e }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub argv: Vec<String>,
    pub input: Option<String>,
    pub thresholds: Option<ThresholdRecord>,
    pub eps: f64,
    pub seed: Option<u64>,
    /// `None` means all available cores.
    pub threads: Option<usize>,
    pub outputs: Vec<String>,
    pub stats: serde_json::Value,
}

impl Manifest {
    pub fn new(command: &str, eps: f64) -> Self {
        Self {
            tool: "sbmt",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            argv: std::env::args().collect(),
            input: None,
            thresholds: None,
            eps,
            seed: None,
            threads: None,
            outputs: Vec::new(),
            stats: serde_json::Value::Null,
        }
    }

    /// Writes `<first output>.manifest.json` and returns its path.
    pub fn write(&self) -> Result<Option<PathBuf>> {
        let Some(first) = self.outputs.first() else { return Ok(None) };
        let path = manifest_path(Path::new(first));
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, json + "\n").with_context(|| format!("writing {}", path.display()))?;
        Ok(Some(path))
    }
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}
