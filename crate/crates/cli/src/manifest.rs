//! Reproducibility manifest: every command records its configuration,
//! seed, version, and the SHA-256 of every file it wrote.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use claysplat_core::Result;

pub struct Manifest {
    command: String,
    seed: Option<u64>,
    config: BTreeMap<String, String>,
    outputs: Vec<PathBuf>,
    out_dir: PathBuf,
}

impl Manifest {
    pub fn new(command: &str, out_dir: &Path) -> Self {
        Self {
            command: command.to_string(),
            seed: None,
            config: BTreeMap::new(),
            outputs: Vec::new(),
            out_dir: out_dir.to_path_buf(),
        }
    }

    pub fn seed(&mut self, seed: u64) -> &mut Self {
        self.seed = Some(seed);
        self
    }

    pub fn config(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.config.insert(key.to_string(), value.to_string());
        self
    }

    /// Register a written file (relative to the out dir when possible).
    pub fn output(&mut self, path: &Path) -> &mut Self {
        self.outputs.push(path.to_path_buf());
        self
    }

    pub fn write(&self) -> Result<()> {
        let mut hashes = BTreeMap::new();
        for path in &self.outputs {
            let bytes = std::fs::read(path)?;
            let digest = Sha256::digest(&bytes);
            let rel = path
                .strip_prefix(&self.out_dir)
                .unwrap_or(path)
                .to_string_lossy()
                .to_string();
            hashes.insert(rel, format!("{digest:x}"));
        }
        let doc = serde_json::json!({
            "command": self.command,
            "version": env!("CARGO_PKG_VERSION"),
            "seed": self.seed,
            "config": self.config,
            "outputs": hashes,
        });
        std::fs::create_dir_all(&self.out_dir)?;
        std::fs::write(
            self.out_dir.join("run.json"),
            serde_json::to_string_pretty(&doc).expect("manifest encode"),
        )?;
        Ok(())
    }
}
