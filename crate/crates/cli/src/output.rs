//! Output directory bookkeeping and the run manifest.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::{hex, ExperimentConfig};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Written last, as `manifest.json` in the output directory. Contains no
/// timestamps, so reruns of the same config and seed reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub mode: String,
    pub seed: u64,
    pub config_hash: String,
    /// Mode, seed and params as resolved.
    pub config: Value,
    pub files: Vec<FileEntry>,
    /// Mode-specific diagnostics.
    pub results: Value,
}

pub struct Output {
    dir: PathBuf,
    files: Mutex<BTreeSet<String>>,
}

impl Output {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Mutex::new(BTreeSet::new()),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Create `name` in the output directory and hand a buffered writer to `f`.
    pub fn write<F>(&self, name: &str, f: F) -> Result<()>
    where
        F: FnOnce(&mut BufWriter<File>) -> spikelab::Result<()>,
    {
        let path = self.dir.join(name);
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = BufWriter::new(file);
        f(&mut w).with_context(|| format!("writing {}", path.display()))?;
        w.flush().with_context(|| format!("writing {}", path.display()))?;
        self.files.lock().expect("file list lock").insert(name.to_string());
        Ok(())
    }

    pub fn finish(self, cfg: &ExperimentConfig, results: Value) -> Result<Manifest> {
        let names = self.files.into_inner().expect("file list lock");
        let files = names
            .into_iter()
            .map(|name| {
                let path = self.dir.join(&name);
                let data = std::fs::read(&path).with_context(|| format!("reading back {}", path.display()))?;
                Ok(FileEntry {
                    name,
                    bytes: data.len() as u64,
                    sha256: hex(&Sha256::digest(&data)),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let manifest = Manifest {
            tool: "spikelab".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            mode: cfg.mode.name().into(),
            seed: cfg.seed,
            config_hash: cfg.hash(),
            config: serde_json::json!({ "mode": cfg.mode, "seed": cfg.seed, "params": cfg.params }),
            files,
            results,
        };
        let path = self.dir.join(MANIFEST_NAME);
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(manifest)
    }
}
