//! CSV tables, the run manifest, and atomic file writes.
//!
//! Every table starts with a comment line `# qcov <table> v<schema>`; the schema
//! number changes whenever columns change.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// A CSV table assembled in memory.
pub struct Table {
    name: &'static str,
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new(name: &'static str, header: &[&str]) -> Result<Self, CliError> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header)?;
        Ok(Self { name, writer })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields)?;
        Ok(())
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    pub fn into_bytes(self) -> Result<Vec<u8>, CliError> {
        let body = self
            .writer
            .into_inner()
            .map_err(|e| CliError::Io(e.into_error()))?;
        let mut out = format!("# qcov {} v{SCHEMA_VERSION}\n", self.name).into_bytes();
        out.extend(body);
        Ok(out)
    }
}

/// Shortest round-trip text of a float; `NaN` and `inf` spelled as Rust prints them.
pub fn num(x: f64) -> String {
    x.to_string()
}

/// Writes `bytes` to `dir/name` through a temporary file and a rename.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir)?;
    let target = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, &target)?;
    Ok(target)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Fully expanded configuration; pass the manifest as `--config` to rerun.
    pub config: String,
    pub seed: Option<u64>,
    pub threads: usize,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub wall_seconds: f64,
    pub outputs: Vec<String>,
    pub passed: bool,
}

impl RunManifest {
    pub fn file_name() -> &'static str {
        "manifest.json"
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf, CliError> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        write_atomic(dir, Self::file_name(), text.as_bytes())
    }
}

/// Configuration text from either an INI file or a manifest written by a previous run.
pub fn read_config_source(path: &Path) -> Result<String, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    if text.trim_start().starts_with('{') {
        let manifest: RunManifest = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{} is not a run manifest: {e}", path.display())))?;
        Ok(manifest.config)
    } else {
        Ok(text)
    }
}
