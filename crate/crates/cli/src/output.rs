//! Output directories are assembled in a hidden sibling and renamed into
//! place once complete, so a failed run leaves nothing behind.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use levydiff_core::io::format_snapshot;
use levydiff_core::DensitySnapshot;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{CliError, Result};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub config_digest: String,
    pub seed: u64,
    /// Seconds since the Unix epoch.
    pub started: f64,
    pub finished: f64,
    pub workers: usize,
    /// Every file in the directory except this manifest, sorted by path.
    pub artifacts: Vec<Artifact>,
    /// SHA-256 over the sorted `(path, sha256)` pairs.
    pub data_digest: String,
}

impl RunManifest {
    pub fn load(dir: &Path) -> Result<Self> {
        let p = dir.join(MANIFEST);
        let text = fs::read_to_string(&p).map_err(|e| CliError::io(&p, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn data_digest(artifacts: &[Artifact]) -> String {
    let mut h = Sha256::new();
    for a in artifacts {
        h.update(a.path.as_bytes());
        h.update([0]);
        h.update(a.sha256.as_bytes());
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

fn now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

/// A run's output directory while it is being written.
pub struct OutputDir {
    target: PathBuf,
    staging: tempfile::TempDir,
    artifacts: Vec<Artifact>,
    started: f64,
}

impl OutputDir {
    /// Refuses a `target` that already holds files.
    pub fn create(target: &Path) -> Result<Self> {
        if target.exists() {
            let mut entries = fs::read_dir(target).map_err(|e| CliError::io(target, e))?;
            if entries.next().is_some() {
                return Err(CliError::Usage(format!(
                    "output directory {} is not empty",
                    target.display()
                )));
            }
        }
        let parent = match target.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        fs::create_dir_all(&parent).map_err(|e| CliError::io(&parent, e))?;
        let staging = tempfile::Builder::new()
            .prefix(".levydiff-staging-")
            .tempdir_in(&parent)
            .map_err(|e| CliError::io(&parent, e))?;
        Ok(OutputDir {
            target: target.to_path_buf(),
            staging,
            artifacts: Vec::new(),
            started: now(),
        })
    }

    pub fn staging_path(&self) -> &Path {
        self.staging.path()
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        if rel == MANIFEST || self.artifacts.iter().any(|a| a.path == rel) {
            return Err(CliError::Usage(format!("artifact {rel} written twice")));
        }
        let p = self.staging.path().join(rel);
        if let Some(dir) = p.parent() {
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
        fs::write(&p, bytes).map_err(|e| CliError::io(&p, e))?;
        self.artifacts.push(Artifact {
            path: rel.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value).expect("serializable");
        text.push('\n');
        self.write(rel, text.as_bytes())
    }

    /// Writes `<dir>/<stem>_<index>.dat` per snapshot; returns the paths.
    pub fn write_snapshots(
        &mut self,
        dir: &str,
        stem: &str,
        series: &[DensitySnapshot],
    ) -> Result<Vec<String>> {
        let width = series.len().to_string().len().max(2);
        series
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let rel = format!("{dir}/{stem}_{i:0width$}.dat");
                self.write(&rel, format_snapshot(s).as_bytes()).map(|_| rel)
            })
            .collect()
    }

    /// Writes the manifest and moves the directory into place.
    pub fn finish(
        mut self,
        command: &str,
        config_digest: &str,
        seed: u64,
        workers: usize,
    ) -> Result<RunManifest> {
        self.artifacts.sort_by(|a, b| a.path.cmp(&b.path));
        let manifest = RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config_digest: config_digest.to_string(),
            seed,
            started: self.started,
            finished: now(),
            workers,
            data_digest: data_digest(&self.artifacts),
            artifacts: self.artifacts,
        };
        let p = self.staging.path().join(MANIFEST);
        let mut text = serde_json::to_string_pretty(&manifest).expect("serializable");
        text.push('\n');
        fs::write(&p, text).map_err(|e| CliError::io(&p, e))?;
        if self.target.exists() {
            fs::remove_dir(&self.target).map_err(|e| CliError::io(&self.target, e))?;
        }
        let staged = self.staging.keep();
        fs::rename(&staged, &self.target).map_err(|e| {
            let _ = fs::remove_dir_all(&staged);
            CliError::io(&self.target, e)
        })?;
        Ok(manifest)
    }
}
