use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use projwalk_core::EmpiricalMeasure;

#[derive(Clone, Debug, Serialize)]
pub struct OutputEntry {
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub experiment: String,
    pub seed: u64,
    pub ensemble_file: String,
    pub ensemble_sha256: String,
    pub config: serde_json::Value,
    /// The only field that changes between identical runs.
    pub wall_clock_seconds: f64,
    pub outputs: Vec<OutputEntry>,
}

pub const MANIFEST: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Collects the files written by one run together with their checksums.
pub struct Outputs {
    dir: PathBuf,
    entries: Vec<OutputEntry>,
}

impl Outputs {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Outputs { dir: dir.to_path_buf(), entries: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn entries(&self) -> &[OutputEntry] {
        &self.entries
    }

    pub fn bytes(&mut self, name: &str, data: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, data).with_context(|| format!("writing {}", path.display()))?;
        self.entries.push(OutputEntry { file: name.to_string(), bytes: data.len(), sha256: sha256_hex(data) });
        Ok(())
    }

    pub fn csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r)?;
        }
        let data = w.into_inner().context("flushing csv")?;
        self.bytes(name, &data)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut data = serde_json::to_vec_pretty(value)?;
        data.push(b'\n');
        self.bytes(name, &data)
    }

    pub fn measure(&mut self, name: &str, m: &EmpiricalMeasure) -> Result<()> {
        self.bytes(name, m.to_text().as_bytes())
    }
}

/// Writes a measure in the text format of `docs/formats.md`.
pub fn save_measure(path: &Path, m: &EmpiricalMeasure) -> Result<()> {
    std::fs::write(path, m.to_text()).with_context(|| format!("writing {}", path.display()))
}

pub fn load_measure(path: &Path) -> Result<EmpiricalMeasure> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    EmpiricalMeasure::from_text(&text).with_context(|| format!("parsing {}", path.display()))
}
