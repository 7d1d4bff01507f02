use std::collections::BTreeMap;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::RunConfig;
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const FORMAT_VERSION: u32 = 1;

pub fn sha256_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex::encode(h.finalize()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    /// Paths relative to the output directory.
    pub artifacts: BTreeMap<String, Artifact>,
    pub counts: BTreeMap<String, u64>,
}

/// Everything needed to check or repeat a run. Contains no timestamps or
/// absolute paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub tool_version: String,
    pub config: RunConfig,
    pub config_digest: String,
    pub run_seed: u64,
    /// Input files as named in the config, with their digests.
    pub inputs: BTreeMap<String, String>,
    pub stages: BTreeMap<String, StageRecord>,
}

pub fn config_digest(cfg: &RunConfig) -> Result<String> {
    Ok(sha256_bytes(serde_json::to_string(cfg)?.as_bytes()))
}

impl Manifest {
    pub fn new(cfg: &RunConfig) -> Result<Self> {
        Ok(Self {
            format_version: FORMAT_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config: cfg.clone(),
            config_digest: config_digest(cfg)?,
            run_seed: cfg.run_seed,
            inputs: BTreeMap::new(),
            stages: BTreeMap::new(),
        })
    }

    pub fn load(out_dir: &Path) -> Result<Self> {
        let path = out_dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn save(&self, out_dir: &Path) -> Result<PathBuf> {
        let path = out_dir.join(MANIFEST_FILE);
        std::fs::write(&path, self.to_json()?).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    pub fn count(&self, stage: &str, key: &str) -> Option<u64> {
        self.stages.get(stage)?.counts.get(key).copied()
    }

    pub fn artifacts(&self) -> impl Iterator<Item = (&str, &Artifact)> {
        self.stages
            .values()
            .flat_map(|s| s.artifacts.iter().map(|(p, a)| (p.as_str(), a)))
    }

    /// Artifacts that are missing or whose digest no longer matches.
    pub fn verify(&self, out_dir: &Path) -> Vec<String> {
        self.artifacts()
            .filter(|(p, a)| sha256_file(&out_dir.join(p)).map_or(true, |d| d != a.sha256))
            .map(|(p, _)| p.to_string())
            .collect()
    }
}

/// Records the files a stage writes, relative to the output directory.
#[derive(Debug)]
pub struct StageLog {
    out_dir: PathBuf,
    pub record: StageRecord,
}

impl StageLog {
    pub fn new(out_dir: &Path) -> Self {
        Self {
            out_dir: out_dir.to_path_buf(),
            record: StageRecord::default(),
        }
    }

    pub fn artifact(&mut self, path: &Path) -> Result<()> {
        let rel = path
            .strip_prefix(&self.out_dir)
            .map_err(|_| Error::Config(format!("{} is outside the output dir", path.display())))?;
        let bytes = std::fs::metadata(path)
            .map_err(|e| Error::io(path, e))?
            .len();
        let key = rel
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/");
        self.record.artifacts.insert(
            key,
            Artifact {
                sha256: sha256_file(path)?,
                bytes,
            },
        );
        Ok(())
    }

    pub fn write(&mut self, path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
        std::fs::write(path, contents).map_err(|e| Error::io(path, e))?;
        self.artifact(path)
    }

    pub fn count(&mut self, key: &str, n: usize) {
        self.record.counts.insert(key.to_string(), n as u64);
    }
}
