use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use claimx_core::eval::content_hash;
use serde::Serialize;

/// Record of one run: enough to repeat it and to check that its inputs are
/// unchanged. Contains no timestamps, so identical runs write identical
/// manifests.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub config: serde_json::Value,
    pub seed: u64,
    /// Input role to path and SHA-256 of the file contents.
    pub inputs: BTreeMap<String, InputFile>,
    /// Files written by the run, relative to the output directory.
    pub outputs: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct InputFile {
    pub path: PathBuf,
    pub sha256: String,
}

impl Manifest {
    pub fn new(command: &str, config: &impl Serialize, seed: u64) -> Result<Self> {
        Ok(Manifest {
            command: command.to_string(),
            config: serde_json::to_value(config)?,
            seed,
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
        })
    }

    /// Hashes `path` and records it under `role`; returns the file bytes.
    pub fn input(&mut self, role: &str, path: &Path) -> Result<Vec<u8>> {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        self.inputs.insert(
            role.to_string(),
            InputFile {
                path: path.to_path_buf(),
                sha256: content_hash(&bytes),
            },
        );
        Ok(bytes)
    }

    pub fn input_opt(&mut self, role: &str, path: Option<&Path>) -> Result<Option<Vec<u8>>> {
        path.map(|p| self.input(role, p)).transpose()
    }

    pub fn config_hash(&self) -> String {
        content_hash(self.config.to_string().as_bytes())
    }
}

/// Output directory that records what it writes.
pub struct OutDir {
    dir: PathBuf,
    pub manifest: Manifest,
}

impl OutDir {
    pub fn create(dir: &Path, manifest: Manifest) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(OutDir {
            dir: dir.to_path_buf(),
            manifest,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf> {
        let path = self.path(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.manifest.outputs.push(name.to_string());
        log::info!("wrote {}", path.display());
        Ok(path)
    }

    pub fn finish(self) -> Result<()> {
        let json = serde_json::to_string_pretty(&self.manifest)? + "\n";
        let path = self.path("manifest.json");
        fs::write(&path, json).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}
