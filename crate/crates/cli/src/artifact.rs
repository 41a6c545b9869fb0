//! Artifact storage: atomic writes, `.meta` sidecars carrying fingerprints,
//! cache checks, and the per-command run report.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Ordered key/value description hashed into a short fingerprint.
#[derive(Debug, Clone, Default)]
pub struct Fingerprint {
    text: String,
}

impl Fingerprint {
    pub fn new(stage: &str) -> Fingerprint {
        let mut f = Fingerprint::default();
        f.add("stage", stage).add("tool", env!("CARGO_PKG_VERSION"));
        f
    }

    pub fn add(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Fingerprint {
        self.text.push_str(&format!("{key}={value}\n"));
        self
    }

    pub fn finish(&self) -> String {
        sha256_hex(self.text.as_bytes())[..16].to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Meta {
    pub artifact: String,
    pub stage: String,
    pub fingerprint: String,
    /// Hash of the input contents the artifact was built from.
    pub inputs: String,
    pub sha256: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub info: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Written,
    Cached,
    Failed,
}

#[derive(Debug, Clone, Serialize)]
pub struct ArtifactEvent {
    pub path: String,
    pub status: Status,
}

/// Description of an artifact about to be written.
#[derive(Debug, Clone)]
pub struct Provenance {
    pub stage: &'static str,
    pub fingerprint: String,
    pub inputs: String,
    pub seed: Option<u64>,
    pub info: BTreeMap<String, String>,
}

impl Provenance {
    pub fn new(stage: &'static str, fingerprint: &str, inputs: &str) -> Provenance {
        Provenance { stage, fingerprint: fingerprint.to_string(), inputs: inputs.to_string(), seed: None, info: BTreeMap::new() }
    }

    pub fn seed(mut self, seed: u64) -> Provenance {
        self.seed = Some(seed);
        self
    }

    pub fn info(mut self, key: &str, value: impl ToString) -> Provenance {
        self.info.insert(key.to_string(), value.to_string());
        self
    }
}

pub struct Store {
    root: PathBuf,
    events: Mutex<Vec<ArtifactEvent>>,
}

fn meta_path(p: &Path) -> PathBuf {
    let mut s = p.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

/// Write through a temp file in the same directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().ok_or_else(|| CliError::io(path, "no parent directory"))?;
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

impl Store {
    pub fn new(root: &Path) -> Store {
        Store { root: root.to_path_buf(), events: Mutex::new(Vec::new()) }
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    pub fn record(&self, rel: &str, status: Status) {
        self.events.lock().expect("event log").push(ArtifactEvent { path: rel.to_string(), status });
    }

    pub fn read_meta(&self, rel: &str) -> Option<Meta> {
        let text = std::fs::read_to_string(meta_path(&self.path(rel))).ok()?;
        toml::from_str(&text).ok()
    }

    /// True when the artifact exists, its bytes match its sidecar, and the
    /// sidecar records the same fingerprint and inputs.
    pub fn is_fresh(&self, rel: &str, fingerprint: &str, inputs: &str) -> bool {
        let Some(meta) = self.read_meta(rel) else { return false };
        if meta.fingerprint != fingerprint || meta.inputs != inputs {
            return false;
        }
        std::fs::read(self.path(rel)).is_ok_and(|b| sha256_hex(&b) == meta.sha256)
    }

    /// Record a cache hit for each listed artifact.
    pub fn mark_cached(&self, rels: &[String]) {
        for r in rels {
            log::debug!("event=artifact path={r} status=cached");
            self.record(r, Status::Cached);
        }
    }

    pub fn mark_failed(&self, rel: &str) {
        self.record(rel, Status::Failed);
    }

    pub fn write(&self, rel: &str, bytes: &[u8], prov: &Provenance) -> Result<()> {
        let path = self.path(rel);
        let meta = Meta {
            artifact: rel.to_string(),
            stage: prov.stage.to_string(),
            fingerprint: prov.fingerprint.clone(),
            inputs: prov.inputs.clone(),
            sha256: sha256_hex(bytes),
            seed: prov.seed,
            info: prov.info.clone(),
        };
        let meta_text = toml::to_string(&meta).map_err(|e| CliError::Internal(e.to_string()))?;
        let unchanged = std::fs::read(&path).is_ok_and(|b| b == bytes)
            && std::fs::read_to_string(meta_path(&path)).is_ok_and(|m| m == meta_text);
        if unchanged {
            self.record(rel, Status::Cached);
            return Ok(());
        }
        write_atomic(&path, bytes)?;
        write_atomic(&meta_path(&path), meta_text.as_bytes())?;
        log::debug!("event=artifact path={rel} status=written");
        self.record(rel, Status::Written);
        Ok(())
    }

    /// Read an upstream artifact, refusing it when missing, corrupted, or made
    /// under a different fingerprint.
    pub fn read_checked(&self, rel: &str, expected: &str, command: &'static str) -> Result<(Vec<u8>, Meta)> {
        let missing = || CliError::MissingPrerequisite { path: rel.to_string(), command };
        let meta = self.read_meta(rel).ok_or_else(missing)?;
        let bytes = std::fs::read(self.path(rel)).map_err(|_| missing())?;
        if sha256_hex(&bytes) != meta.sha256 {
            return Err(CliError::Data(format!("{rel} does not match the checksum in its sidecar")));
        }
        if meta.fingerprint != expected {
            return Err(CliError::FingerprintMismatch {
                path: rel.to_string(),
                found: meta.fingerprint,
                expected: expected.to_string(),
                command,
            });
        }
        Ok((bytes, meta))
    }

    pub fn read_checked_text(&self, rel: &str, expected: &str, command: &'static str) -> Result<(String, Meta)> {
        let (b, m) = self.read_checked(rel, expected, command)?;
        let s = String::from_utf8(b).map_err(|_| CliError::Data(format!("{rel} is not UTF-8")))?;
        Ok((s, m))
    }

    pub fn events(&self) -> Vec<ArtifactEvent> {
        let mut v = self.events.lock().expect("event log").clone();
        v.sort_by(|a, b| a.path.cmp(&b.path));
        v
    }
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub tool: String,
    pub command: String,
    pub seed: u64,
    pub config_fingerprint: String,
    pub written: usize,
    pub cached: usize,
    pub failed: usize,
    pub artifacts: Vec<ArtifactEvent>,
    pub warnings: Vec<String>,
    pub errors: Vec<String>,
    pub exit_code: i32,
}

impl RunReport {
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).map_err(|e| CliError::Internal(e.to_string()))?;
        text.push('\n');
        if std::fs::read_to_string(path).is_ok_and(|old| old == text) {
            return Ok(());
        }
        write_atomic(path, text.as_bytes())
    }
}
