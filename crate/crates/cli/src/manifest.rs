//! Run manifests written next to each output file.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub struct Run {
    subcommand: &'static str,
    started: Instant,
    inputs: Vec<Value>,
    outputs: Vec<Value>,
    parameters: Value,
}

impl Run {
    pub fn start(subcommand: &'static str) -> Self {
        Self {
            subcommand,
            started: Instant::now(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            parameters: Value::Null,
        }
    }

    /// Records an input by the exact bytes that were read.
    pub fn input(&mut self, path: &Path, bytes: &[u8]) {
        self.inputs.push(json!({ "path": path.display().to_string(), "sha256": sha256_hex(bytes) }));
    }

    pub fn parameters(&mut self, params: Value) {
        self.parameters = params;
    }

    /// Writes `bytes` to `path` and lists it as an output.
    pub fn write_output(&mut self, path: &Path, bytes: &[u8]) -> Result<()> {
        fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))?;
        self.outputs
            .push(json!({ "path": path.display().to_string(), "sha256": sha256_hex(bytes) }));
        Ok(())
    }

    /// Writes `<primary>.manifest.json`.
    pub fn finish(self, primary: &Path, results: Value) -> Result<PathBuf> {
        let path = manifest_path(primary);
        let doc = json!({
            "subcommand": self.subcommand,
            "version": env!("CARGO_PKG_VERSION"),
            "parameters": self.parameters,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "results": results,
            "wall_time_s": self.started.elapsed().as_secs_f64(),
        });
        let mut text = serde_json::to_string_pretty(&doc)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
        Ok(path)
    }
}

pub fn manifest_path(primary: &Path) -> PathBuf {
    let mut name = primary.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}
