//! Content-addressed response cache.
//!
//! Layout: `<root>/<first two hex chars>/<digest>.txt` holds the raw response
//! text, `<digest>.json` next to it holds the request parameters. Entries are
//! immutable once written; writers go through a temp file and rename, so
//! concurrent writers of the same digest are harmless.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use serde::Serialize;

use super::digest::is_valid_digest;
use super::{GenerationRequest, Stage};

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

#[derive(Debug, Clone)]
pub struct ResponseCache {
    root: PathBuf,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    digest: &'a str,
    model_id: &'a str,
    max_tokens: u32,
    temperature: f64,
    stop: &'a Option<Vec<String>>,
    stage: Stage,
    prompt_chars: usize,
}

impl ResponseCache {
    pub fn new(root: impl Into<PathBuf>) -> io::Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn entry_path(&self, digest: &str, ext: &str) -> PathBuf {
        self.root.join(&digest[..2]).join(format!("{digest}.{ext}"))
    }

    pub fn get(&self, digest: &str) -> Option<String> {
        if !is_valid_digest(digest) {
            return None;
        }
        fs::read_to_string(self.entry_path(digest, "txt")).ok()
    }

    pub fn contains(&self, digest: &str) -> bool {
        is_valid_digest(digest) && self.entry_path(digest, "txt").is_file()
    }

    pub fn put(&self, digest: &str, req: &GenerationRequest, text: &str) -> io::Result<()> {
        if !is_valid_digest(digest) {
            return Err(io::Error::new(io::ErrorKind::InvalidInput, format!("bad digest `{digest}`")));
        }
        let dir = self.root.join(&digest[..2]);
        fs::create_dir_all(&dir)?;
        let sidecar = Sidecar {
            digest,
            model_id: &req.model_id,
            max_tokens: req.max_tokens,
            temperature: req.temperature,
            stop: &req.stop,
            stage: req.stage,
            prompt_chars: req.prompt.chars().count(),
        };
        let meta = serde_json::to_vec_pretty(&sidecar).map_err(io::Error::other)?;
        write_atomic(&dir, &self.entry_path(digest, "json"), &meta)?;
        write_atomic(&dir, &self.entry_path(digest, "txt"), text.as_bytes())
    }
}

fn write_atomic(dir: &Path, target: &Path, bytes: &[u8]) -> io::Result<()> {
    let n = TMP_COUNTER.fetch_add(1, Ordering::Relaxed);
    let tmp = dir.join(format!(".tmp-{}-{n}", std::process::id()));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, target).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn put_then_get() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResponseCache::new(dir.path()).unwrap();
        let req = GenerationRequest::new(Stage::InfoRE, "m", "p");
        let d = req.digest();
        assert!(cache.get(&d).is_none());
        cache.put(&d, &req, "text").unwrap();
        assert_eq!(cache.get(&d).as_deref(), Some("text"));
        assert!(dir.path().join(&d[..2]).join(format!("{d}.json")).is_file());
        assert!(cache.get("../etc").is_none());
        assert!(cache.put("zz", &req, "x").is_err());
    }

    #[test]
    fn concurrent_writers_agree() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResponseCache::new(dir.path()).unwrap();
        let req = GenerationRequest::new(Stage::InfoRE, "m", "p");
        let d = req.digest();
        std::thread::scope(|s| {
            for _ in 0..8 {
                s.spawn(|| cache.put(&d, &req, "same").unwrap());
            }
        });
        assert_eq!(cache.get(&d).as_deref(), Some("same"));
    }
}
