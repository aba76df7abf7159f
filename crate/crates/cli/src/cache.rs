//! Content-hash stage cache.
//!
//! A stage is identified by name and keyed by a hash of its parameters and
//! input file contents. Its stamp under `.cache/` records the key and the
//! files it wrote; the stage is skipped when the key matches and every
//! recorded output still exists.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use texelatt::io::{read_json, write_json};

use crate::error::CliError;

pub const CACHE_DIR: &str = ".cache";

#[derive(Default)]
pub struct KeyHasher(Sha256);

impl KeyHasher {
    pub fn new(stage: &str) -> Self {
        let mut h = KeyHasher::default();
        h.text(stage);
        h
    }

    /// Length-prefixed, so that concatenations cannot collide.
    pub fn bytes(&mut self, data: &[u8]) -> &mut Self {
        self.0.update((data.len() as u64).to_le_bytes());
        self.0.update(data);
        self
    }

    pub fn text(&mut self, s: &str) -> &mut Self {
        self.bytes(s.as_bytes())
    }

    pub fn json<T: Serialize>(&mut self, value: &T) -> &mut Self {
        self.text(&serde_json::to_string(value).expect("serializable"))
    }

    pub fn file(&mut self, path: &Path) -> Result<&mut Self, CliError> {
        let data = fs::read(path).map_err(|e| CliError::io(path, e))?;
        Ok(self.bytes(&data))
    }

    pub fn files<'a>(&mut self, paths: impl IntoIterator<Item = &'a Path>) -> Result<&mut Self, CliError> {
        for p in paths {
            self.file(p)?;
        }
        Ok(self)
    }

    pub fn finish(&self) -> String {
        self.0.clone().finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Stamp {
    key: String,
    /// Relative to the output root.
    outputs: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StageStatus {
    Ran,
    Cached,
}

/// Outcome of one stage, for logging and the report manifest.
#[derive(Debug, Clone)]
pub struct StageRecord {
    pub name: String,
    pub status: StageStatus,
    /// Files written by the stage, relative to the output root.
    pub outputs: Vec<PathBuf>,
    /// The stage's stamp file, relative to the output root.
    pub stamp: PathBuf,
}

pub struct StageCache {
    root: PathBuf,
    pub records: Vec<StageRecord>,
}

impl StageCache {
    pub fn new(root: &Path) -> Self {
        StageCache {
            root: root.to_path_buf(),
            records: Vec::new(),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn stamp_path(name: &str) -> PathBuf {
        let file: String = name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect();
        PathBuf::from(CACHE_DIR).join(format!("{file}.json"))
    }

    /// Runs `stage` unless its stamp matches `key`. The closure returns the
    /// files it wrote, relative to the output root.
    pub fn run<F>(&mut self, name: &str, key: &str, stage: F) -> Result<&StageRecord, CliError>
    where
        F: FnOnce(&Path) -> Result<Vec<PathBuf>, CliError>,
    {
        let stamp_rel = Self::stamp_path(name);
        let stamp_abs = self.root.join(&stamp_rel);
        if let Ok(stamp) = read_json::<Stamp>(&stamp_abs) {
            if stamp.key == key && stamp.outputs.iter().all(|p| self.root.join(p).is_file()) {
                eprintln!("{name}: cached");
                self.records.push(StageRecord {
                    name: name.to_string(),
                    status: StageStatus::Cached,
                    outputs: stamp.outputs,
                    stamp: stamp_rel,
                });
                return Ok(self.records.last().unwrap());
            }
        }
        eprintln!("{name}: running");
        // a stale stamp must not survive a failed rerun
        let _ = fs::remove_file(&stamp_abs);
        let outputs = stage(&self.root)?;
        write_json(
            &stamp_abs,
            &Stamp {
                key: key.to_string(),
                outputs: outputs.clone(),
            },
        )
        .map_err(|e| CliError::stage(name, e))?;
        self.records.push(StageRecord {
            name: name.to_string(),
            status: StageStatus::Ran,
            outputs,
            stamp: stamp_rel,
        });
        Ok(self.records.last().unwrap())
    }
}
