//! Write-once run directories and manifests.
//!
//! A run stages every artifact in a hidden sibling directory and renames it
//! into place only after the manifest is written, so a failed run leaves
//! nothing behind at the target path.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tempfile::TempDir;

use crate::config::{EvaluateArgs, ExactArgs, ExplainArgs, SynthArgs};
use crate::error::{CliError, CliResult};

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_NAME: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn absolute(path: &Path) -> CliResult<PathBuf> {
    Ok(if path.is_absolute() {
        path.to_path_buf()
    } else {
        std::env::current_dir()?.join(path)
    })
}

/// Resolved configuration of a run, tagged by command.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum RunConfig {
    Explain(ExplainArgs),
    Evaluate(EvaluateArgs),
    Exact(ExactArgs),
    Synth(SynthArgs),
}

impl RunConfig {
    pub fn out(&self) -> &Path {
        match self {
            RunConfig::Explain(a) => &a.out,
            RunConfig::Evaluate(a) => &a.out,
            RunConfig::Exact(a) => &a.out,
            RunConfig::Synth(a) => &a.out,
        }
    }

    pub fn set_out(&mut self, out: PathBuf) {
        match self {
            RunConfig::Explain(a) => a.out = out,
            RunConfig::Evaluate(a) => a.out = out,
            RunConfig::Exact(a) => a.out = out,
            RunConfig::Synth(a) => a.out = out,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactRecord {
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub tool: String,
    pub tool_version: String,
    pub config: RunConfig,
    /// Input file path → sha256.
    pub inputs: BTreeMap<String, String>,
    pub artifacts: BTreeMap<String, ArtifactRecord>,
}

/// Hashes of the files a run read.
#[derive(Debug, Default)]
pub struct Inputs(BTreeMap<String, String>);

impl Inputs {
    pub fn record(&mut self, path: &Path) -> CliResult<()> {
        let bytes = std::fs::read(path).map_err(|source| CliError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        self.0.insert(path.display().to_string(), sha256_hex(&bytes));
        Ok(())
    }
}

pub struct RunOutput {
    target: PathBuf,
    staging: TempDir,
    artifacts: BTreeMap<String, ArtifactRecord>,
}

impl RunOutput {
    /// Refuses existing targets before any work is done.
    pub fn create(target: &Path) -> CliResult<Self> {
        if target.exists() {
            return Err(CliError::OutputExists(target.to_path_buf()));
        }
        let parent = match target.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        std::fs::create_dir_all(&parent)?;
        let staging = tempfile::Builder::new().prefix(".pairx-staging-").tempdir_in(&parent)?;
        Ok(Self {
            target: target.to_path_buf(),
            staging,
            artifacts: BTreeMap::new(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> CliResult<()> {
        std::fs::write(self.staging.path().join(name), bytes)?;
        self.artifacts.insert(
            name.to_string(),
            ArtifactRecord {
                sha256: sha256_hex(bytes),
                bytes: bytes.len() as u64,
            },
        );
        Ok(())
    }

    /// Writes the manifest and moves the run into place.
    pub fn finish(self, config: RunConfig, inputs: Inputs) -> CliResult<Manifest> {
        let manifest = Manifest {
            schema_version: MANIFEST_SCHEMA_VERSION,
            tool: "pairx".into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            config,
            inputs: inputs.0,
            artifacts: self.artifacts,
        };
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        std::fs::write(self.staging.path().join(MANIFEST_NAME), text)?;
        if self.target.exists() {
            return Err(CliError::OutputExists(self.target));
        }
        let staged = self.staging.keep();
        if let Err(e) = std::fs::rename(&staged, &self.target) {
            let _ = std::fs::remove_dir_all(&staged);
            return Err(e.into());
        }
        Ok(manifest)
    }
}
