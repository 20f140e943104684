//! Artifact plumbing: the run manifest, CSV tables and JSON reports.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

/// Everything needed to regenerate an artifact. Serialized with every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// The arguments as given, so that `rerun` can replay them.
    pub argv: Vec<String>,
    pub parameters: serde_json::Value,
    pub precision_bits: u32,
    pub tol: f64,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub wall_time_s: f64,
}

const MANIFEST_PREFIX: &str = "# manifest ";

/// A table with a header row. Values are written with 17 significant digits.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self, manifest: &RunManifest) -> Result<String> {
        let mut out = String::new();
        out.push_str(MANIFEST_PREFIX);
        out.push_str(&serde_json::to_string(manifest)?);
        out.push('\n');
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        Ok(out)
    }
}

/// JSON report with the manifest first.
#[derive(Debug, Serialize)]
pub struct Report<T: Serialize> {
    pub manifest: RunManifest,
    #[serde(flatten)]
    pub body: T,
}

pub fn write_out(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut h = io::stdout().lock();
            h.write_all(text.as_bytes())?;
            h.flush()?;
            Ok(())
        }
    }
}

/// Pull the manifest out of a CSV table or a JSON report.
pub fn read_manifest(path: &Path) -> Result<RunManifest> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if let Some(line) = text.lines().next().and_then(|l| l.strip_prefix(MANIFEST_PREFIX)) {
        return Ok(serde_json::from_str(line)?);
    }
    let v: serde_json::Value = serde_json::from_str(&text).context("artifact is neither a table nor a report")?;
    match v.get("manifest") {
        Some(m) => Ok(serde_json::from_value(m.clone())?),
        None => bail!("no manifest in {}", path.display()),
    }
}
