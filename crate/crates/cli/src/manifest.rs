//! Run manifest: config snapshot, seeds, per-stage fingerprints, artifact
//! hashes and wall times, stored as TOML next to the artifacts.

use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{io_err, CliError, Result};

pub const FILE_NAME: &str = "run_manifest.toml";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    /// Hash of the stage's config keys and input artifact hashes.
    pub fingerprint: String,
    pub wall_time_secs: f64,
    /// Output path (relative to the run directory) → sha256.
    pub outputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub library_version: String,
    pub config: BTreeMap<String, String>,
    pub seeds: BTreeMap<String, u64>,
    pub stages: BTreeMap<String, StageRecord>,
}

impl RunManifest {
    pub fn load_or_default(dir: &Path) -> Result<Self> {
        let path = dir.join(FILE_NAME);
        if !path.exists() {
            return Ok(Self::default());
        }
        let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Manifest(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let path = dir.join(FILE_NAME);
        let text = toml::to_string(self).map_err(|e| CliError::Manifest(e.to_string()))?;
        fs::write(&path, text).map_err(|e| io_err(&path, e))
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut f = fs::File::open(path).map_err(|e| io_err(path, e))?;
    let mut h = Sha256::new();
    let mut buf = [0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf).map_err(|e| io_err(path, e))?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex::encode(h.finalize()))
}

pub fn sha256_str(s: &str) -> String {
    hex::encode(Sha256::digest(s.as_bytes()))
}

/// Files under `root/rel` (a file or a directory), as sorted relative paths.
pub fn list_files(root: &Path, rel: &str) -> Result<Vec<String>> {
    let full = root.join(rel);
    if full.is_file() {
        return Ok(vec![rel.to_string()]);
    }
    let mut out = Vec::new();
    let mut stack = vec![PathBuf::from(rel)];
    while let Some(dir) = stack.pop() {
        let abs = root.join(&dir);
        let entries = fs::read_dir(&abs).map_err(|e| io_err(&abs, e))?;
        for entry in entries {
            let entry = entry.map_err(|e| io_err(&abs, e))?;
            let rel_path = dir.join(entry.file_name());
            if entry.path().is_dir() {
                stack.push(rel_path);
            } else {
                out.push(rel_path.to_string_lossy().replace('\\', "/"));
            }
        }
    }
    out.sort();
    Ok(out)
}
