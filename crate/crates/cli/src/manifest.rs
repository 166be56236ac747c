//! Run manifest: config snapshot, input/output digests, tool version, and
//! per-stage timings, written atomically next to the outputs.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Default, Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub config: BTreeMap<String, String>,
    /// File name -> sha256 of the inputs the command read.
    pub inputs: BTreeMap<String, String>,
    /// File name -> sha256 of the outputs the command wrote.
    pub outputs: BTreeMap<String, String>,
    pub timings_ms: Vec<(String, u128)>,
}

impl RunManifest {
    pub fn new(command: &str, config: BTreeMap<String, String>) -> Self {
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config,
            ..Default::default()
        }
    }

    pub fn record_input(&mut self, path: &Path) -> Result<()> {
        let name = file_name(path);
        self.inputs.insert(name, sha256_file(path)?);
        Ok(())
    }

    pub fn record_output(&mut self, path: &Path) -> Result<()> {
        let name = file_name(path);
        self.outputs.insert(name, sha256_file(path)?);
        Ok(())
    }

    pub fn record_timing(&mut self, stage: &str, elapsed: std::time::Duration) {
        self.timings_ms.push((stage.to_string(), elapsed.as_millis()));
    }

    /// Write to `<dir>/manifest.json` via a temp file and rename.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let tmp = dir.join("manifest.json.partial");
        let final_path = dir.join("manifest.json");
        std::fs::write(&tmp, serde_json::to_string_pretty(self)?)
            .with_context(|| format!("writing {}", tmp.display()))?;
        std::fs::rename(&tmp, &final_path)
            .with_context(|| format!("renaming into {}", final_path.display()))?;
        Ok(())
    }
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes =
        std::fs::read(path).with_context(|| format!("digesting {}", path.display()))?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(hex::encode(hasher.finalize()))
}
