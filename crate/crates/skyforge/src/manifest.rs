//! Run manifests: a JSON record of what a command read, wrote and was
//! configured with, written next to its main output.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::ProjectConfig;
use crate::error::Result;
use crate::fsutil;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileRef {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub argv: Vec<String>,
    pub config: ProjectConfig,
    pub config_hash: String,
    pub catalog_sha256: String,
    pub seeds: BTreeMap<String, u64>,
    pub inputs: Vec<FileRef>,
    pub outputs: Vec<FileRef>,
    /// Command-specific results (counts, metrics, thresholds).
    pub stats: BTreeMap<String, Value>,
    pub started_unix_s: u64,
    pub wall_clock_s: f64,
    /// Wall-clock seconds per named stage.
    pub timings: BTreeMap<String, f64>,
}

/// Collects manifest fields while a command runs.
pub struct ManifestBuilder {
    manifest: RunManifest,
    started: Instant,
}

impl ManifestBuilder {
    pub fn new(command: &str, config: &ProjectConfig, catalog_hash: [u8; 32]) -> Self {
        ManifestBuilder {
            manifest: RunManifest {
                command: command.to_string(),
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                argv: std::env::args().collect(),
                config: config.clone(),
                config_hash: config.hash(),
                catalog_sha256: fsutil::hex(&catalog_hash),
                seeds: BTreeMap::new(),
                inputs: Vec::new(),
                outputs: Vec::new(),
                stats: BTreeMap::new(),
                started_unix_s: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
                wall_clock_s: 0.0,
                timings: BTreeMap::new(),
            },
            started: Instant::now(),
        }
    }

    pub fn seed(&mut self, name: &str, value: u64) -> &mut Self {
        self.manifest.seeds.insert(name.to_string(), value);
        self
    }

    pub fn stat(&mut self, name: &str, value: impl Into<Value>) -> &mut Self {
        self.manifest.stats.insert(name.to_string(), value.into());
        self
    }

    pub fn timing(&mut self, stage: &str, seconds: f64) -> &mut Self {
        self.manifest.timings.insert(stage.to_string(), seconds);
        self
    }

    pub fn input(&mut self, path: &Path) -> Result<&mut Self> {
        let sha256 = fsutil::file_sha256(path)?;
        self.manifest.inputs.push(FileRef {
            path: path.to_path_buf(),
            sha256,
        });
        Ok(self)
    }

    pub fn output(&mut self, path: &Path) -> Result<&mut Self> {
        let sha256 = fsutil::file_sha256(path)?;
        self.manifest.outputs.push(FileRef {
            path: path.to_path_buf(),
            sha256,
        });
        Ok(self)
    }

    /// Writes `<primary>.manifest.json` and returns its path.
    pub fn write_next_to(mut self, primary: &Path) -> Result<PathBuf> {
        self.manifest.wall_clock_s = self.started.elapsed().as_secs_f64();
        let path = manifest_path(primary);
        let text = serde_json::to_string_pretty(&self.manifest).expect("serializable");
        fsutil::write_atomic(&path, text.as_bytes())?;
        Ok(path)
    }
}

pub fn manifest_path(primary: &Path) -> PathBuf {
    let mut name = primary.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    primary.with_file_name(name)
}

pub fn read(path: &Path) -> Result<RunManifest> {
    let text = fsutil::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| crate::error::Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn written_manifest_reads_back() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("designs.jsonl");
        fsutil::write_atomic(&out, b"x\n").unwrap();
        let mut b = ManifestBuilder::new("generate", &ProjectConfig::default(), [1; 32]);
        b.seed("generator", 4).stat("count", 1).output(&out).unwrap();
        let path = b.write_next_to(&out).unwrap();
        assert_eq!(path, dir.path().join("designs.jsonl.manifest.json"));
        let m = read(&path).unwrap();
        assert_eq!(m.command, "generate");
        assert_eq!(m.seeds["generator"], 4);
        assert_eq!(m.outputs[0].sha256, fsutil::sha256_hex(b"x\n"));
        assert_eq!(m.config, ProjectConfig::default());
    }
}
