//! Run manifests: one record per input with checksums of every output.

use std::fs;
use std::path::Path;

use farfield_core::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    /// Relative to the command's output directory.
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub input: Option<String>,
    pub outputs: Vec<OutputFile>,
    pub stream_id: Option<String>,
    pub params: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub command: String,
    pub config: serde_json::Value,
    pub records: Vec<Record>,
}

impl Manifest {
    pub fn new(command: &str, config: serde_json::Value, mut records: Vec<Record>) -> Self {
        records.sort_by(|a, b| {
            a.input
                .cmp(&b.input)
                .then_with(|| a.outputs.first().map(|o| &o.path).cmp(&b.outputs.first().map(|o| &o.path)))
        });
        Manifest {
            tool: concat!("farfield/", env!("CARGO_PKG_VERSION")).to_string(),
            command: command.to_string(),
            config,
            records,
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Checksums `name` inside `dir`.
pub fn output_file(dir: &Path, name: &str) -> Result<OutputFile> {
    Ok(OutputFile {
        path: name.to_string(),
        sha256: sha256_file(&dir.join(name))?,
    })
}
