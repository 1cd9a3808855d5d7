use std::path::Path;

use anyhow::{Context, Result};
use ricci4::flow::{FlowConfig, Termination};
use ricci4::functionals::FunctionalConfig;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Everything needed to reproduce a run. There are no timestamps, so the
/// manifest itself is identical across re-runs of the same build.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config_hash: String,
    pub seed: u64,
    pub config: RunConfig,
    pub flow: FlowConfig,
    pub functionals: FunctionalConfig,
    pub termination: Vec<Termination>,
    pub files: Vec<FileEntry>,
}

impl RunManifest {
    pub fn new(command: &'static str, config: &RunConfig, seed: u64) -> Result<RunManifest> {
        Ok(RunManifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            config_hash: config_hash(config, seed)?,
            seed,
            config: config.clone(),
            flow: config.flow_config(),
            functionals: config.functional_config(),
            termination: Vec::new(),
            files: Vec::new(),
        })
    }

    /// Records `names` (relative to `dir`) with their sizes and digests.
    pub fn add_files<S: AsRef<str>>(&mut self, dir: &Path, names: &[S]) -> Result<()> {
        for name in names {
            let name = name.as_ref();
            let bytes = std::fs::read(dir.join(name)).with_context(|| format!("reading back {name}"))?;
            self.files.push(FileEntry { name: name.to_string(), bytes: bytes.len() as u64, sha256: sha256_hex(&bytes) });
        }
        Ok(())
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join("manifest.json");
        std::fs::write(&path, serde_json::to_string_pretty(self)? + "\n")
            .with_context(|| format!("writing {}", path.display()))
    }
}

/// Digest of the parsed configuration and seed, so formatting changes in
/// the TOML file do not change the hash.
pub fn config_hash(config: &RunConfig, seed: u64) -> Result<String> {
    let canonical = serde_json::to_vec(&(config, seed))?;
    Ok(sha256_hex(&canonical))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
