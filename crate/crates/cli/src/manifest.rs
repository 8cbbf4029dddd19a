//! Run manifests: which command ran, on what inputs, with what settings.
//!
//! Every command writes `manifest.json` into its output directory when it
//! finishes, recording the resolved configuration, the seed, SHA-256
//! digests of every input file, and the list of outputs. The manifest is
//! the one output that is not byte-reproducible across runs (it carries
//! wall-clock timestamps); everything else is.

use std::fs;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use blockhmm::error::{Error, Result};

#[derive(Debug, Serialize)]
struct InputDigest {
    path: String,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct RunManifest {
    command: String,
    version: String,
    seed: u64,
    /// Resolved configuration in force, serialized as TOML text.
    config: Option<String>,
    inputs: Vec<InputDigest>,
    outputs: Vec<String>,
    started: String,
    finished: String,
}

/// Collects manifest fields while a command runs.
pub struct ManifestBuilder {
    command: String,
    seed: u64,
    config: Option<String>,
    inputs: Vec<InputDigest>,
    outputs: Vec<String>,
    started: String,
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

impl ManifestBuilder {
    pub fn start(command: &str, seed: u64) -> Self {
        ManifestBuilder {
            command: command.to_string(),
            seed,
            config: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
            started: now(),
        }
    }

    pub fn config_snapshot(&mut self, text: String) {
        self.config = Some(text);
    }

    /// Hashes an input file's bytes into the manifest.
    pub fn input(&mut self, path: &Path) -> Result<()> {
        let bytes =
            fs::read(path).map_err(|e| Error::format(format!("{}: {e}", path.display())))?;
        self.inputs.push(InputDigest {
            path: path.display().to_string(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
        Ok(())
    }

    /// Hashes every regular file under a directory, in sorted order.
    pub fn input_dir(&mut self, dir: &Path) -> Result<()> {
        let mut files: Vec<_> = fs::read_dir(dir)
            .map_err(|e| Error::format(format!("{}: {e}", dir.display())))?
            .collect::<std::io::Result<Vec<_>>>()?
            .into_iter()
            .map(|e| e.path())
            .filter(|p| p.is_file())
            .collect();
        files.sort();
        for f in &files {
            self.input(f)?;
        }
        Ok(())
    }

    pub fn output(&mut self, name: &str) {
        self.outputs.push(name.to_string());
    }

    /// Writes `manifest.json` under `dir`, atomically (temp file + rename).
    pub fn write(self, dir: &Path) -> Result<()> {
        let manifest = RunManifest {
            command: self.command,
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: self.seed,
            config: self.config,
            inputs: self.inputs,
            outputs: self.outputs,
            started: self.started,
            finished: now(),
        };
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        let tmp = dir.join("manifest.json.tmp");
        fs::write(&tmp, text)?;
        fs::rename(&tmp, dir.join("manifest.json"))?;
        Ok(())
    }
}
