//! Text-generation access: an OpenAI-compatible HTTP backend, a closed-world
//! replay backend, and a content-addressed response cache in front of either.

use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

mod cache;
mod digest;
mod gate;
mod http;
mod replay;

pub use cache::ResponseCache;
pub use digest::digest;
pub use gate::Gate;
pub use http::{ApiMode, HttpBackend, HttpConfig};
pub use replay::{record_replay, ReplayBackend, ReplayStore};

pub const DEFAULT_MAX_TOKENS: u32 = 2048;
pub const DEFAULT_PARALLELISM: usize = 4;

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("invalid generation request: {0}")]
    InvalidRequest(String),
    #[error("backend unreachable after {attempts} attempt(s): {last_error}")]
    BackendUnreachable { attempts: u32, last_error: String },
    #[error("backend answered HTTP {status}: {body}")]
    HttpStatus { status: u16, body: String },
    #[error("replay store has no entry for digest {digest}")]
    ReplayMiss { digest: String },
    #[error("malformed backend response: {0}")]
    ResponseMalformed(String),
    #[error("digest {digest} maps to different texts")]
    DuplicateDigestConflict { digest: String },
    #[error("{path}:{line}: {message}")]
    ReplayFormat { path: String, line: usize, message: String },
    #[error("backend failure: {0}")]
    Backend(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl GatewayError {
    /// Short stable name, used in traces and reports.
    pub fn kind(&self) -> &'static str {
        match self {
            GatewayError::InvalidRequest(_) => "InvalidRequest",
            GatewayError::BackendUnreachable { .. } => "BackendUnreachable",
            GatewayError::HttpStatus { .. } => "HttpStatus",
            GatewayError::ReplayMiss { .. } => "ReplayMiss",
            GatewayError::ResponseMalformed(_) => "ResponseMalformed",
            GatewayError::DuplicateDigestConflict { .. } => "DuplicateDigestConflict",
            GatewayError::ReplayFormat { .. } => "ReplayFormat",
            GatewayError::Backend(_) => "Backend",
            GatewayError::Io(_) => "Io",
        }
    }
}

/// Pipeline stage a generation belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Stage {
    RelationExtraction,
    InfoRE,
    Verdict,
}

impl Stage {
    pub const ALL: [Stage; 3] = [Stage::RelationExtraction, Stage::InfoRE, Stage::Verdict];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::RelationExtraction => "relation_extraction",
            Stage::InfoRE => "infore",
            Stage::Verdict => "verdict",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub prompt: String,
    pub max_tokens: u32,
    pub temperature: f64,
    pub stop: Option<Vec<String>>,
    pub model_id: String,
    pub stage: Stage,
}

impl GenerationRequest {
    pub fn new(stage: Stage, model_id: impl Into<String>, prompt: impl Into<String>) -> Self {
        Self {
            prompt: prompt.into(),
            max_tokens: DEFAULT_MAX_TOKENS,
            temperature: 0.0,
            stop: None,
            model_id: model_id.into(),
            stage,
        }
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.prompt.is_empty() {
            return Err(GatewayError::InvalidRequest("prompt is empty".into()));
        }
        if self.max_tokens == 0 {
            return Err(GatewayError::InvalidRequest("max_tokens must be at least 1".into()));
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(GatewayError::InvalidRequest(format!(
                "temperature must be a finite non-negative number, got {}",
                self.temperature
            )));
        }
        Ok(())
    }

    pub fn digest(&self) -> String {
        digest(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BackendKind {
    Http,
    Replay,
    /// A generator running in this process (scripted fakes, adapters).
    InProcess,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationResponse {
    pub text: String,
    pub backend: BackendKind,
    pub cached: bool,
    /// Wall-clock time of the HTTP exchange; zero for cache hits and non-HTTP backends.
    pub latency_ms: u64,
    pub request_digest: String,
}

/// Anything that turns a [`GenerationRequest`] into text.
pub trait TextGenerator: Send + Sync {
    fn generate(&self, req: &GenerationRequest) -> Result<GenerationResponse, GatewayError>;
}

/// The raw completion call behind a [`Gateway`].
pub trait CompletionBackend: Send + Sync {
    fn kind(&self) -> BackendKind;
    fn complete(&self, req: &GenerationRequest, digest: &str) -> Result<String, GatewayError>;
}

/// In-process backend driven by a closure.
pub struct ScriptedBackend<F> {
    script: F,
}

impl<F> ScriptedBackend<F>
where
    F: Fn(&GenerationRequest) -> Result<String, GatewayError> + Send + Sync,
{
    pub fn new(script: F) -> Self {
        Self { script }
    }
}

impl<F> CompletionBackend for ScriptedBackend<F>
where
    F: Fn(&GenerationRequest) -> Result<String, GatewayError> + Send + Sync,
{
    fn kind(&self) -> BackendKind {
        BackendKind::InProcess
    }

    fn complete(&self, req: &GenerationRequest, _digest: &str) -> Result<String, GatewayError> {
        (self.script)(req)
    }
}

#[derive(Serialize)]
struct RunLogEntry<'a> {
    digest: &'a str,
    stage: Stage,
    text: &'a str,
}

/// Backend plus optional response cache, concurrency gate and run log.
pub struct Gateway {
    backend: Box<dyn CompletionBackend>,
    cache: Option<ResponseCache>,
    gate: Arc<Gate>,
    run_log: Option<Mutex<BufWriter<File>>>,
    backend_calls: [AtomicU64; 3],
    cache_hits: AtomicU64,
}

impl fmt::Debug for Gateway {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Gateway")
            .field("backend", &self.backend.kind())
            .field("cache", &self.cache)
            .field("parallelism", &self.gate.capacity())
            .finish()
    }
}

impl Gateway {
    pub fn new(backend: impl CompletionBackend + 'static) -> Self {
        Self::from_boxed(Box::new(backend))
    }

    pub fn from_boxed(backend: Box<dyn CompletionBackend>) -> Self {
        Self {
            backend,
            cache: None,
            gate: Arc::new(Gate::new(DEFAULT_PARALLELISM)),
            run_log: None,
            backend_calls: Default::default(),
            cache_hits: AtomicU64::new(0),
        }
    }

    pub fn with_cache(mut self, cache: ResponseCache) -> Self {
        self.cache = Some(cache);
        self
    }

    /// Upper bound on simultaneous backend calls.
    pub fn with_parallelism(mut self, parallelism: usize) -> Self {
        self.gate = Arc::new(Gate::new(parallelism));
        self
    }

    /// Appends `{"digest", "stage", "text"}` lines for every response served,
    /// the input format of [`record_replay`].
    pub fn with_run_log(mut self, path: impl AsRef<Path>) -> std::io::Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        self.run_log = Some(Mutex::new(BufWriter::new(file)));
        Ok(self)
    }

    pub fn backend_kind(&self) -> BackendKind {
        self.backend.kind()
    }

    /// Calls that reached the backend (cache hits excluded).
    pub fn backend_calls(&self, stage: Stage) -> u64 {
        self.backend_calls[stage.index()].load(Ordering::SeqCst)
    }

    pub fn total_backend_calls(&self) -> u64 {
        Stage::ALL.iter().map(|s| self.backend_calls(*s)).sum()
    }

    pub fn cache_hits(&self) -> u64 {
        self.cache_hits.load(Ordering::SeqCst)
    }

    pub fn flush_run_log(&self) -> std::io::Result<()> {
        if let Some(log) = &self.run_log {
            log.lock().expect("run log poisoned").flush()?;
        }
        Ok(())
    }

    fn log(&self, digest: &str, stage: Stage, text: &str) {
        let Some(log) = &self.run_log else { return };
        let line = serde_json::to_string(&RunLogEntry { digest, stage, text }).expect("serializable");
        let mut w = log.lock().expect("run log poisoned");
        if let Err(e) = writeln!(w, "{line}") {
            tracing::warn!("run log write failed: {e}");
        }
    }
}

impl TextGenerator for Gateway {
    fn generate(&self, req: &GenerationRequest) -> Result<GenerationResponse, GatewayError> {
        req.validate()?;
        let request_digest = digest(req);
        // Sampling runs are never cached: a hit would freeze one sample.
        let cacheable = req.temperature == 0.0;

        if let (Some(cache), true) = (&self.cache, cacheable) {
            if let Some(text) = cache.get(&request_digest) {
                self.cache_hits.fetch_add(1, Ordering::SeqCst);
                self.log(&request_digest, req.stage, &text);
                return Ok(GenerationResponse {
                    text,
                    backend: self.backend.kind(),
                    cached: true,
                    latency_ms: 0,
                    request_digest,
                });
            }
        }

        let (text, elapsed) = {
            let _permit = self.gate.acquire();
            self.backend_calls[req.stage.index()].fetch_add(1, Ordering::SeqCst);
            let started = Instant::now();
            let text = self.backend.complete(req, &request_digest)?;
            (text, started.elapsed())
        };
        let latency_ms = match self.backend.kind() {
            BackendKind::Http => elapsed.as_millis() as u64,
            _ => 0,
        };

        if let (Some(cache), true) = (&self.cache, cacheable) {
            if let Err(e) = cache.put(&request_digest, req, &text) {
                tracing::warn!("cache write for {request_digest} failed: {e}");
            }
        }
        self.log(&request_digest, req.stage, &text);
        Ok(GenerationResponse {
            text,
            backend: self.backend.kind(),
            cached: false,
            latency_ms,
            request_digest,
        })
    }
}

impl<T: TextGenerator + ?Sized> TextGenerator for Arc<T> {
    fn generate(&self, req: &GenerationRequest) -> Result<GenerationResponse, GatewayError> {
        (**self).generate(req)
    }
}

impl<T: TextGenerator + ?Sized> TextGenerator for &T {
    fn generate(&self, req: &GenerationRequest) -> Result<GenerationResponse, GatewayError> {
        (**self).generate(req)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn echo() -> ScriptedBackend<impl Fn(&GenerationRequest) -> Result<String, GatewayError>> {
        ScriptedBackend::new(|req: &GenerationRequest| Ok(format!("echo:{}", req.prompt)))
    }

    #[test]
    fn cache_hit_on_second_identical_request() {
        let dir = tempfile::tempdir().unwrap();
        let gw = Gateway::new(echo()).with_cache(ResponseCache::new(dir.path()).unwrap());
        let req = GenerationRequest::new(Stage::Verdict, "m", "hello");
        let a = gw.generate(&req).unwrap();
        let b = gw.generate(&req).unwrap();
        assert!(!a.cached);
        assert!(b.cached);
        assert_eq!(a.text, b.text);
        assert_eq!(gw.backend_calls(Stage::Verdict), 1);
        assert_eq!(gw.cache_hits(), 1);
    }

    #[test]
    fn sampling_requests_bypass_cache() {
        let dir = tempfile::tempdir().unwrap();
        let gw = Gateway::new(echo()).with_cache(ResponseCache::new(dir.path()).unwrap());
        let mut req = GenerationRequest::new(Stage::Verdict, "m", "hello");
        req.temperature = 0.7;
        gw.generate(&req).unwrap();
        assert!(!gw.generate(&req).unwrap().cached);
        assert_eq!(gw.backend_calls(Stage::Verdict), 2);
    }

    #[test]
    fn invalid_requests_rejected() {
        let gw = Gateway::new(echo());
        let mut req = GenerationRequest::new(Stage::Verdict, "m", "");
        assert!(matches!(gw.generate(&req), Err(GatewayError::InvalidRequest(_))));
        req.prompt = "x".into();
        req.max_tokens = 0;
        assert!(matches!(gw.generate(&req), Err(GatewayError::InvalidRequest(_))));
        req.max_tokens = 1;
        req.temperature = -0.5;
        assert!(matches!(gw.generate(&req), Err(GatewayError::InvalidRequest(_))));
        assert_eq!(gw.total_backend_calls(), 0);
    }

    #[test]
    fn run_log_feeds_replay() {
        let dir = tempfile::tempdir().unwrap();
        let log = dir.path().join("run.jsonl");
        let gw = Gateway::new(echo()).with_run_log(&log).unwrap();
        let r1 = GenerationRequest::new(Stage::Verdict, "m", "one");
        let r2 = GenerationRequest::new(Stage::InfoRE, "m", "two");
        gw.generate(&r1).unwrap();
        gw.generate(&r2).unwrap();
        gw.generate(&r1).unwrap();
        gw.flush_run_log().unwrap();

        let store = record_replay(&log, dir.path().join("replay.jsonl")).unwrap();
        assert_eq!(store.len(), 2);
        let replay = Gateway::new(ReplayBackend::new(store));
        let resp = replay.generate(&r2).unwrap();
        assert_eq!(resp.text, "echo:two");
        assert_eq!(resp.backend, BackendKind::Replay);
        let miss = GenerationRequest::new(Stage::InfoRE, "m", "three");
        assert!(matches!(replay.generate(&miss), Err(GatewayError::ReplayMiss { .. })));
    }
}
