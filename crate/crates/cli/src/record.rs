//! Machine-readable run records written next to every result set.

use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunRecord {
    pub tool: &'static str,
    pub version: &'static str,
    pub core_version: &'static str,
    pub subcommand: String,
    pub config_sha256: String,
    pub config: serde_json::Value,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<String>,
}

pub fn digest_file(path: &Path) -> Result<InputDigest, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Output(format!("cannot digest {}: {e}", path.display())))?;
    Ok(InputDigest {
        path: path.display().to_string(),
        bytes: bytes.len() as u64,
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

impl RunRecord {
    pub fn new(subcommand: &str, cfg: &RunConfig, inputs: &[PathBuf], outputs: &[PathBuf]) -> Result<Self, CliError> {
        let config = cfg.fingerprint_json();
        let canonical = serde_json::to_vec(&config).expect("config serializes");
        let mut inputs: Vec<InputDigest> = inputs.iter().map(|p| digest_file(p)).collect::<Result<_, _>>()?;
        inputs.sort_by(|a, b| a.path.cmp(&b.path));
        inputs.dedup_by(|a, b| a.path == b.path);
        let mut outputs: Vec<String> = outputs
            .iter()
            .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .collect();
        outputs.sort();
        Ok(Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            core_version: genmetrics_core::VERSION,
            subcommand: subcommand.to_string(),
            config_sha256: hex::encode(Sha256::digest(&canonical)),
            config,
            inputs,
            outputs,
        })
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf, CliError> {
        let path = dir.join("run_record.json");
        let mut json = serde_json::to_vec_pretty(self).expect("record serializes");
        json.push(b'\n');
        std::fs::write(&path, json)
            .map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
        Ok(path)
    }
}
