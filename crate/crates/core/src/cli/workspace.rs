//! Output directory handling: lock file, hashed artifacts and run manifests.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::RunConfig;
use crate::error::{Error, Result};

pub const LOCK_FILE: &str = ".lock";

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut h = Sha256::new();
    std::io::copy(&mut f, &mut h).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(h.finalize()))
}

/// Exclusive claim on an output directory, released on drop.
#[derive(Debug)]
pub struct DirLock {
    path: PathBuf,
}

impl DirLock {
    pub fn acquire(dir: &Path) -> Result<Self> {
        let path = dir.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(Self { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(Error::Config(format!(
                "output directory {} is in use by another run (delete {} if no run is active)",
                dir.display(),
                path.display()
            ))),
            Err(e) => Err(Error::io(&path, e)),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    /// Relative to the output directory.
    pub name: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub seed: u64,
    pub config: RunConfig,
    pub inputs: Vec<InputEntry>,
    pub artifacts: Vec<ArtifactEntry>,
}

impl Manifest {
    pub fn file_name(command: &str) -> String {
        format!("manifest.{command}.json")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// A locked output directory collecting the inputs read and artifacts written by one run.
#[derive(Debug)]
pub struct Workspace {
    root: PathBuf,
    inputs: BTreeMap<String, String>,
    artifacts: BTreeMap<String, ArtifactEntry>,
    _lock: DirLock,
}

impl Workspace {
    pub fn open(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            inputs: BTreeMap::new(),
            artifacts: BTreeMap::new(),
            _lock: DirLock::acquire(root)?,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Records `path` as a run input unless this run produced it.
    pub fn note_input(&mut self, path: &Path) -> Result<()> {
        let produced = path
            .strip_prefix(&self.root)
            .ok()
            .and_then(|rel| rel.to_str())
            .is_some_and(|rel| self.artifacts.contains_key(rel));
        if !produced {
            let hash = sha256_file(path)?;
            self.inputs.insert(path.display().to_string(), hash);
        }
        Ok(())
    }

    pub fn read_to_string(&mut self, path: &Path) -> Result<String> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.note_input(path)?;
        Ok(text)
    }

    /// Streams an artifact through `write`, then records its hash.
    pub fn write_with(&mut self, name: &str, write: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
        let path = self.path(name);
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = BufWriter::new(file);
        write(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(&path, e))?;
        drop(w);
        self.register(name)
    }

    /// Records an artifact file already written under the root.
    pub fn register(&mut self, name: &str) -> Result<()> {
        let path = self.path(name);
        let bytes = fs::metadata(&path).map_err(|e| Error::io(&path, e))?.len();
        let entry = ArtifactEntry {
            name: name.to_string(),
            sha256: sha256_file(&path)?,
            bytes,
        };
        self.artifacts.insert(name.to_string(), entry);
        Ok(())
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<()> {
        self.write_with(name, |w| w.write_all(text.as_bytes()))
    }

    /// Pretty JSON with a trailing newline.
    pub fn write_json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write_text(name, &text)
    }

    pub fn write_jsonl<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<()> {
        let lines: Vec<String> = rows.iter().map(serde_json::to_string).collect::<serde_json::Result<_>>()?;
        self.write_with(name, |w| {
            for l in &lines {
                writeln!(w, "{l}")?;
            }
            Ok(())
        })
    }

    pub fn artifacts(&self) -> impl Iterator<Item = &ArtifactEntry> {
        self.artifacts.values()
    }

    /// Writes `manifest.<command>.json` and releases the lock.
    pub fn finish(self, command: &str, config: &RunConfig) -> Result<Manifest> {
        let manifest = Manifest {
            command: command.to_string(),
            seed: config.seed,
            config: config.clone(),
            inputs: self
                .inputs
                .iter()
                .map(|(path, sha256)| InputEntry {
                    path: path.clone(),
                    sha256: sha256.clone(),
                })
                .collect(),
            artifacts: self.artifacts.values().cloned().collect(),
        };
        let path = self.path(&Manifest::file_name(command));
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(manifest)
    }
}
