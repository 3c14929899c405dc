//! Closed-world replay: canned responses keyed by request digest.
//!
//! Store file: JSON Lines, one `{"digest": hex, "text": string}` per line.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::digest::is_valid_digest;
use super::{BackendKind, CompletionBackend, GatewayError, GenerationRequest};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReplayStore {
    entries: BTreeMap<String, String>,
    path: Option<PathBuf>,
}

#[derive(Serialize, Deserialize)]
struct Line {
    digest: String,
    text: String,
}

impl ReplayStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an entry; re-adding the same text is a no-op, a different text is a conflict.
    pub fn insert(&mut self, digest: impl Into<String>, text: impl Into<String>) -> Result<(), GatewayError> {
        let digest = digest.into();
        let text = text.into();
        if !is_valid_digest(&digest) {
            return Err(GatewayError::InvalidRequest(format!("invalid digest `{digest}`")));
        }
        match self.entries.get(&digest) {
            Some(existing) if *existing != text => Err(GatewayError::DuplicateDigestConflict { digest }),
            Some(_) => Ok(()),
            None => {
                self.entries.insert(digest, text);
                Ok(())
            }
        }
    }

    pub fn get(&self, digest: &str) -> Option<&str> {
        self.entries.get(digest).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, GatewayError> {
        let path = path.as_ref();
        let mut store = Self::from_lines(path)?;
        store.path = Some(path.to_path_buf());
        Ok(store)
    }

    /// Reads any JSON Lines file whose objects carry `digest` and `text`
    /// (extra keys are ignored, so run logs load directly).
    fn from_lines(path: &Path) -> Result<Self, GatewayError> {
        let reader = BufReader::new(File::open(path)?);
        let mut store = Self::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: Line = serde_json::from_str(&line).map_err(|e| GatewayError::ReplayFormat {
                path: path.display().to_string(),
                line: i + 1,
                message: e.to_string(),
            })?;
            if !is_valid_digest(&parsed.digest) {
                return Err(GatewayError::ReplayFormat {
                    path: path.display().to_string(),
                    line: i + 1,
                    message: format!("invalid digest `{}`", parsed.digest),
                });
            }
            store.insert(parsed.digest, parsed.text)?;
        }
        Ok(store)
    }

    /// Writes the store sorted by digest.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), GatewayError> {
        let path = path.as_ref();
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent)?;
        }
        let mut w = BufWriter::new(File::create(path)?);
        for (digest, text) in &self.entries {
            let line = serde_json::to_string(&Line {
                digest: digest.clone(),
                text: text.clone(),
            })
            .expect("serializable");
            writeln!(w, "{line}")?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Converts a run log into a replay store file.
pub fn record_replay(run_log: impl AsRef<Path>, out: impl AsRef<Path>) -> Result<ReplayStore, GatewayError> {
    let mut store = ReplayStore::from_lines(run_log.as_ref())?;
    store.save(out.as_ref())?;
    store.path = Some(out.as_ref().to_path_buf());
    Ok(store)
}

#[derive(Debug, Clone)]
pub struct ReplayBackend {
    store: ReplayStore,
}

impl ReplayBackend {
    pub fn new(store: ReplayStore) -> Self {
        Self { store }
    }
}

impl CompletionBackend for ReplayBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Replay
    }

    fn complete(&self, _req: &GenerationRequest, digest: &str) -> Result<String, GatewayError> {
        self.store
            .get(digest)
            .map(str::to_string)
            .ok_or_else(|| GatewayError::ReplayMiss { digest: digest.to_string() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const D1: &str = "1111111111111111111111111111111111111111111111111111111111111111";
    const D2: &str = "2222222222222222222222222222222222222222222222222222222222222222";

    fn write_log(dir: &Path, lines: &[(&str, &str)]) -> PathBuf {
        let path = dir.join("log.jsonl");
        let body: String = lines
            .iter()
            .map(|(d, t)| format!("{{\"digest\":\"{d}\",\"stage\":\"Verdict\",\"text\":{}}}\n", serde_json::to_string(t).unwrap()))
            .collect();
        fs::write(&path, body).unwrap();
        path
    }

    #[test]
    fn two_distinct_entries() {
        let dir = tempfile::tempdir().unwrap();
        let log = write_log(dir.path(), &[(D1, "a"), (D2, "b")]);
        let store = record_replay(&log, dir.path().join("out.jsonl")).unwrap();
        assert_eq!(store.len(), 2);
        assert_eq!(ReplayStore::load(dir.path().join("out.jsonl")).unwrap().len(), 2);
    }

    #[test]
    fn repeated_entry_collapses_and_is_idempotent() {
        let dir = tempfile::tempdir().unwrap();
        let log = write_log(dir.path(), &[(D1, "a"), (D1, "a")]);
        let out = dir.path().join("out.jsonl");
        assert_eq!(record_replay(&log, &out).unwrap().len(), 1);
        let first = fs::read(&out).unwrap();
        record_replay(&log, &out).unwrap();
        assert_eq!(fs::read(&out).unwrap(), first);
    }

    #[test]
    fn conflicting_texts_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let log = write_log(dir.path(), &[(D1, "a"), (D1, "b")]);
        assert!(matches!(
            record_replay(&log, dir.path().join("out.jsonl")),
            Err(GatewayError::DuplicateDigestConflict { .. })
        ));
    }

    #[test]
    fn bad_digest_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let log = write_log(dir.path(), &[("abc", "a")]);
        assert!(matches!(ReplayStore::load(&log), Err(GatewayError::ReplayFormat { line: 1, .. })));
    }
}
