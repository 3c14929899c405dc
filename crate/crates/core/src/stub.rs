//! A minimal OpenAI-compatible HTTP server for tests and demos.
//!
//! Serves `/v1/chat/completions` and `/v1/completions` from a responder
//! closure, one thread per connection, and counts requests per pipeline stage
//! along with peak concurrency.

use std::io::{self, BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;

use serde_json::{json, Value};

use crate::gateway::Stage;
use crate::prompts::classify_prompt;

#[derive(Debug, Clone)]
pub struct StubRequest {
    pub path: String,
    pub body: Value,
    /// Chat message content or completion prompt.
    pub prompt: String,
    pub stage: Option<Stage>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StubReply {
    Text(String),
    /// A non-200 status with this body.
    Status(u16, String),
    /// A 200 response whose body is not a completion.
    Malformed(String),
}

pub type Responder = dyn Fn(&StubRequest) -> StubReply + Send + Sync;

#[derive(Debug, Default)]
struct Counters {
    total: AtomicU64,
    per_stage: [AtomicU64; 3],
    unclassified: AtomicU64,
    in_flight: AtomicU64,
    peak: AtomicU64,
}

fn stage_index(stage: Stage) -> usize {
    match stage {
        Stage::RelationExtraction => 0,
        Stage::InfoRE => 1,
        Stage::Verdict => 2,
    }
}

pub struct StubServer {
    addr: SocketAddr,
    counters: Arc<Counters>,
    stop: Arc<AtomicBool>,
    accept: Option<JoinHandle<()>>,
}

impl StubServer {
    /// Binds an ephemeral localhost port and starts serving.
    pub fn start(responder: impl Fn(&StubRequest) -> StubReply + Send + Sync + 'static) -> io::Result<Self> {
        let listener = TcpListener::bind("127.0.0.1:0")?;
        let addr = listener.local_addr()?;
        let counters = Arc::new(Counters::default());
        let stop = Arc::new(AtomicBool::new(false));
        let responder: Arc<Responder> = Arc::new(responder);
        let accept = {
            let counters = Arc::clone(&counters);
            let stop = Arc::clone(&stop);
            std::thread::spawn(move || {
                for stream in listener.incoming() {
                    if stop.load(Ordering::SeqCst) {
                        break;
                    }
                    let Ok(stream) = stream else { continue };
                    let counters = Arc::clone(&counters);
                    let responder = Arc::clone(&responder);
                    std::thread::spawn(move || {
                        if let Err(e) = serve(stream, &counters, responder.as_ref()) {
                            tracing::debug!("stub connection failed: {e}");
                        }
                    });
                }
            })
        };
        Ok(Self {
            addr,
            counters,
            stop,
            accept: Some(accept),
        })
    }

    /// `http://127.0.0.1:<port>`, suitable as a backend base URL.
    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn total_requests(&self) -> u64 {
        self.counters.total.load(Ordering::SeqCst)
    }

    pub fn stage_requests(&self, stage: Stage) -> u64 {
        self.counters.per_stage[stage_index(stage)].load(Ordering::SeqCst)
    }

    pub fn unclassified_requests(&self) -> u64 {
        self.counters.unclassified.load(Ordering::SeqCst)
    }

    /// Highest number of requests handled at the same time.
    pub fn peak_concurrency(&self) -> u64 {
        self.counters.peak.load(Ordering::SeqCst)
    }

    pub fn reset_counts(&self) {
        let c = &self.counters;
        c.total.store(0, Ordering::SeqCst);
        c.unclassified.store(0, Ordering::SeqCst);
        c.peak.store(0, Ordering::SeqCst);
        for s in &c.per_stage {
            s.store(0, Ordering::SeqCst);
        }
    }
}

impl Drop for StubServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        // Wake the accept loop so it sees the flag.
        let _ = TcpStream::connect(self.addr);
        if let Some(handle) = self.accept.take() {
            let _ = handle.join();
        }
    }
}

struct InFlight<'a>(&'a Counters);

impl<'a> InFlight<'a> {
    fn enter(c: &'a Counters) -> Self {
        let now = c.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
        c.peak.fetch_max(now, Ordering::SeqCst);
        Self(c)
    }
}

impl Drop for InFlight<'_> {
    fn drop(&mut self) {
        self.0.in_flight.fetch_sub(1, Ordering::SeqCst);
    }
}

fn read_chunked(reader: &mut impl BufRead) -> io::Result<Vec<u8>> {
    let mut body = Vec::new();
    loop {
        let mut line = String::new();
        reader.read_line(&mut line)?;
        let size_hex = line.trim().split(';').next().unwrap_or("");
        let size = usize::from_str_radix(size_hex, 16)
            .map_err(|_| io::Error::new(io::ErrorKind::InvalidData, "bad chunk size"))?;
        if size == 0 {
            // Trailer section ends with an empty line.
            loop {
                line.clear();
                if reader.read_line(&mut line)? == 0 || line.trim().is_empty() {
                    return Ok(body);
                }
            }
        }
        let start = body.len();
        body.resize(start + size, 0);
        reader.read_exact(&mut body[start..])?;
        line.clear();
        reader.read_line(&mut line)?;
    }
}

fn serve(stream: TcpStream, counters: &Counters, responder: &Responder) -> io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut request_line = String::new();
    if reader.read_line(&mut request_line)? == 0 {
        return Ok(());
    }
    let path = request_line.split_whitespace().nth(1).unwrap_or("/").to_string();
    let mut content_length = 0usize;
    let mut chunked = false;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line)? == 0 || line.trim().is_empty() {
            break;
        }
        if let Some((name, value)) = line.split_once(':') {
            let (name, value) = (name.trim().to_ascii_lowercase(), value.trim());
            if name == "content-length" {
                content_length = value.parse().unwrap_or(0);
            } else if name == "transfer-encoding" && value.eq_ignore_ascii_case("chunked") {
                chunked = true;
            }
        }
    }
    let body = if chunked {
        read_chunked(&mut reader)?
    } else {
        let mut body = vec![0; content_length];
        reader.read_exact(&mut body)?;
        body
    };

    let _guard = InFlight::enter(counters);
    counters.total.fetch_add(1, Ordering::SeqCst);
    let body: Value = serde_json::from_slice(&body).unwrap_or(Value::Null);
    let chat = path.ends_with("/chat/completions");
    let prompt = if chat {
        body["messages"][0]["content"].as_str()
    } else {
        body["prompt"].as_str()
    }
    .unwrap_or("")
    .to_string();
    let stage = classify_prompt(&prompt);
    match stage {
        Some(s) => counters.per_stage[stage_index(s)].fetch_add(1, Ordering::SeqCst),
        None => counters.unclassified.fetch_add(1, Ordering::SeqCst),
    };

    let request = StubRequest {
        path,
        body,
        prompt,
        stage,
    };
    let (status, payload) = match responder(&request) {
        StubReply::Text(text) => {
            let payload = if chat {
                json!({"choices": [{"index": 0, "message": {"role": "assistant", "content": text}}]})
            } else {
                json!({"choices": [{"index": 0, "text": text}]})
            };
            (200, payload.to_string())
        }
        StubReply::Status(code, body) => (code, body),
        StubReply::Malformed(body) => (200, body),
    };
    let mut stream = stream;
    write!(
        stream,
        "HTTP/1.1 {status} {}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
        reason(status),
        payload.len()
    )?;
    stream.flush()
}

fn reason(status: u16) -> &'static str {
    match status {
        200 => "OK",
        400 => "Bad Request",
        401 => "Unauthorized",
        404 => "Not Found",
        429 => "Too Many Requests",
        500 => "Internal Server Error",
        503 => "Service Unavailable",
        _ => "Status",
    }
}

/// A deterministic stand-in model: one triple per sentence built from its
/// first and last words, the evidence echoed as a bulleted hierarchy, and a
/// `True` verdict.
pub fn toy_responder(request: &StubRequest) -> StubReply {
    let text = match request.stage {
        Some(Stage::RelationExtraction) => {
            let sentence = request
                .prompt
                .split("\nSentence: ")
                .nth(1)
                .and_then(|s| s.split(" \n### Response:").next())
                .unwrap_or("");
            let words: Vec<&str> = sentence
                .split_whitespace()
                .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()))
                .filter(|w| !w.is_empty())
                .collect();
            match (words.first(), words.last()) {
                (Some(h), Some(t)) if words.len() > 1 => format!("({h}, part of, {t})"),
                _ => String::new(),
            }
        }
        Some(Stage::InfoRE) => {
            let evidence = request.prompt.rsplit("### The evidence: ").next().unwrap_or("");
            let evidence = evidence.split("\nThe hierarchical structure:").next().unwrap_or("");
            evidence
                .lines()
                .filter(|l| !l.trim().is_empty())
                .map(|l| format!("- {}", l.trim()))
                .collect::<Vec<_>>()
                .join("\n")
        }
        Some(Stage::Verdict) => "The evidence supports the claim. ###The answer is: True".to_string(),
        None => return StubReply::Status(400, r#"{"error":"unrecognized prompt"}"#.to_string()),
    };
    StubReply::Text(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{Gateway, GenerationRequest, HttpBackend, HttpConfig, TextGenerator};

    #[test]
    fn serves_chat_and_counts_stages() {
        let server = StubServer::start(|req| StubReply::Text(format!("echo:{}", req.prompt.len()))).unwrap();
        let gateway = Gateway::new(HttpBackend::new(HttpConfig::new(server.base_url())));
        let req = GenerationRequest::new(Stage::Verdict, "m", "Question: x?\n###The answer is:");
        let resp = gateway.generate(&req).unwrap();
        assert_eq!(resp.text, "echo:30");
        assert_eq!(server.total_requests(), 1);
        assert_eq!(server.stage_requests(Stage::Verdict), 1);
        assert_eq!(server.peak_concurrency(), 1);
    }

    #[test]
    fn status_replies_surface_as_errors() {
        let server = StubServer::start(|_| StubReply::Status(404, "{}".into())).unwrap();
        let gateway = Gateway::new(HttpBackend::new(HttpConfig::new(server.base_url())));
        let err = gateway
            .generate(&GenerationRequest::new(Stage::Verdict, "m", "p"))
            .unwrap_err();
        assert_eq!(err.kind(), "HttpStatus");
    }
}
