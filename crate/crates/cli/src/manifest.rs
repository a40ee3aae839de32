//! Run manifests and output bookkeeping.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    /// File name relative to the output directory, or the input's base name.
    pub name: String,
    pub sha256: String,
}

/// Written next to a command's outputs as `<command>.manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub seed: u64,
    /// SHA-256 of the canonical JSON of the effective parameters and the
    /// input digests.
    pub config_digest: String,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    /// Taken from `SOURCE_DATE_EPOCH` when set, so runs stay reproducible.
    pub created_at: Option<String>,
}

impl RunManifest {
    pub fn file_name(command: &str) -> String {
        format!("{command}.manifest.json")
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn created_at() -> Option<String> {
    let raw = std::env::var("SOURCE_DATE_EPOCH").ok()?;
    match raw.trim().parse::<i64>().ok().and_then(|s| chrono::DateTime::from_timestamp(s, 0)) {
        Some(t) => Some(t.to_rfc3339_opts(chrono::SecondsFormat::Secs, true)),
        None => {
            log::warn!("ignoring unparseable SOURCE_DATE_EPOCH `{raw}`");
            None
        }
    }
}

/// Collects the inputs and outputs of one command run.
pub struct Run {
    command: &'static str,
    out_dir: PathBuf,
    seed: u64,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
}

impl Run {
    pub fn new(command: &'static str, out_dir: &Path, seed: u64) -> Result<Self, CliError> {
        fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
        Ok(Self {
            command,
            out_dir: out_dir.to_path_buf(),
            seed,
            inputs: Vec::new(),
            outputs: Vec::new(),
        })
    }

    /// Reads an input file and records its digest under its base name.
    pub fn read_input(&mut self, path: &Path) -> Result<Vec<u8>, CliError> {
        let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        self.inputs.push(FileDigest {
            name,
            sha256: sha256_hex(&bytes),
        });
        Ok(bytes)
    }

    pub fn read_input_string(&mut self, path: &Path) -> Result<String, CliError> {
        let bytes = self.read_input(path)?;
        String::from_utf8(bytes).map_err(|e| CliError::io(path, e))
    }

    /// Writes `bytes` to `relative` under the output directory.
    pub fn write(&mut self, relative: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.out_dir.join(relative);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.outputs.retain(|o| o.name != relative);
        self.outputs.push(FileDigest {
            name: relative.to_owned(),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    /// Writes the manifest; `params` are the effective settings of the run.
    pub fn finish(self, params: serde_json::Value) -> Result<RunManifest, CliError> {
        let digest_doc = serde_json::json!({
            "command": self.command,
            "params": params,
            "inputs": self.inputs,
        });
        let manifest = RunManifest {
            command: self.command.to_owned(),
            tool_version: TOOL_VERSION.to_owned(),
            seed: self.seed,
            config_digest: sha256_hex(digest_doc.to_string().as_bytes()),
            inputs: self.inputs,
            outputs: self.outputs,
            created_at: created_at(),
        };
        let path = self.out_dir.join(RunManifest::file_name(self.command));
        let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Data(e.to_string()))?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        Ok(manifest)
    }
}

/// Serializes `rows` as CSV with `header`.
pub fn csv_bytes<I, R>(header: &[&str], rows: I) -> Result<Vec<u8>, CliError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Data(format!("csv output: {e}"));
    w.write_record(header).map_err(err)?;
    for row in rows {
        w.write_record(row).map_err(err)?;
    }
    w.into_inner().map_err(|e| CliError::Data(format!("csv output: {e}")))
}
