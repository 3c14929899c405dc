//! OpenAI-compatible HTTP backend (`/v1/chat/completions`, or the legacy
//! `/v1/completions` shape).

use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use ureq::Agent;

use super::{BackendKind, CompletionBackend, GatewayError, GenerationRequest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApiMode {
    /// `messages: [{role: user, content: prompt}]`, reads `choices[0].message.content`.
    #[default]
    Chat,
    /// `prompt`, reads `choices[0].text`.
    Completions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HttpConfig {
    pub base_url: String,
    pub mode: ApiMode,
    /// Name of the environment variable holding the bearer token.
    pub api_key_env: Option<String>,
    pub timeout: Duration,
    /// Retries after the first attempt for transient failures.
    pub retries: u32,
    pub backoff_base: Duration,
    pub backoff_max: Duration,
}

impl HttpConfig {
    pub fn new(base_url: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            mode: ApiMode::Chat,
            api_key_env: None,
            timeout: Duration::from_secs(120),
            retries: 3,
            backoff_base: Duration::from_millis(500),
            backoff_max: Duration::from_secs(30),
        }
    }

    fn backoff(&self, retry: u32) -> Duration {
        let factor = 1u32.checked_shl(retry).unwrap_or(u32::MAX);
        self.backoff_base.saturating_mul(factor).min(self.backoff_max)
    }
}

pub struct HttpBackend {
    config: HttpConfig,
    endpoint: String,
    api_key: Option<String>,
    agent: Agent,
}

impl fmt::Debug for HttpBackend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HttpBackend")
            .field("endpoint", &self.endpoint)
            .field("api_key", &self.api_key.as_ref().map(|_| "<redacted>"))
            .finish()
    }
}

enum Attempt {
    Done(String),
    Retry(String),
    Fail(GatewayError),
}

impl HttpBackend {
    /// Reads the API key from the configured environment variable, if any.
    pub fn new(config: HttpConfig) -> Self {
        let api_key = config
            .api_key_env
            .as_deref()
            .and_then(|var| std::env::var(var).ok())
            .filter(|k| !k.is_empty());
        let path = match config.mode {
            ApiMode::Chat => "/v1/chat/completions",
            ApiMode::Completions => "/v1/completions",
        };
        let endpoint = format!("{}{path}", config.base_url.trim_end_matches('/'));
        let agent = Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .new_agent();
        Self {
            config,
            endpoint,
            api_key,
            agent,
        }
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn body(&self, req: &GenerationRequest) -> Value {
        let mut body = match self.config.mode {
            ApiMode::Chat => json!({
                "model": req.model_id,
                "messages": [{"role": "user", "content": req.prompt}],
            }),
            ApiMode::Completions => json!({
                "model": req.model_id,
                "prompt": req.prompt,
            }),
        };
        body["max_tokens"] = json!(req.max_tokens);
        body["temperature"] = json!(req.temperature);
        if let Some(stop) = &req.stop {
            body["stop"] = json!(stop);
        }
        body
    }

    fn attempt(&self, body: &Value) -> Attempt {
        let mut request = self.agent.post(&self.endpoint);
        if let Some(key) = &self.api_key {
            request = request.header("Authorization", &format!("Bearer {key}"));
        }
        let mut response = match request.send_json(body) {
            Ok(r) => r,
            Err(e) => {
                return match e {
                    ureq::Error::Timeout(_)
                    | ureq::Error::Io(_)
                    | ureq::Error::HostNotFound
                    | ureq::Error::ConnectionFailed
                    | ureq::Error::Protocol(_)
                    | ureq::Error::BodyStalled => Attempt::Retry(e.to_string()),
                    other => Attempt::Fail(GatewayError::BackendUnreachable {
                        attempts: 1,
                        last_error: other.to_string(),
                    }),
                }
            }
        };
        let status = response.status().as_u16();
        let text = match response.body_mut().read_to_string() {
            Ok(t) => t,
            Err(e) => return Attempt::Retry(format!("reading body: {e}")),
        };
        if status == 429 || status >= 500 {
            return Attempt::Retry(format!("HTTP {status}: {}", truncate(&text)));
        }
        if !(200..300).contains(&status) {
            return Attempt::Fail(GatewayError::HttpStatus {
                status,
                body: truncate(&text),
            });
        }
        match extract_text(self.config.mode, &text) {
            Ok(t) => Attempt::Done(t),
            Err(e) => Attempt::Fail(e),
        }
    }
}

fn truncate(s: &str) -> String {
    s.chars().take(300).collect()
}

/// Pulls the generated text out of a completion response body.
pub(crate) fn extract_text(mode: ApiMode, body: &str) -> Result<String, GatewayError> {
    let value: Value = serde_json::from_str(body)
        .map_err(|e| GatewayError::ResponseMalformed(format!("invalid JSON ({e}): {}", truncate(body))))?;
    let choice = &value["choices"][0];
    let text = match mode {
        ApiMode::Chat => choice["message"]["content"].as_str(),
        ApiMode::Completions => choice["text"].as_str(),
    };
    text.map(str::to_string).ok_or_else(|| {
        GatewayError::ResponseMalformed(format!("no generated text in response: {}", truncate(body)))
    })
}

impl CompletionBackend for HttpBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Http
    }

    fn complete(&self, req: &GenerationRequest, digest: &str) -> Result<String, GatewayError> {
        let body = self.body(req);
        let attempts = self.config.retries + 1;
        let mut last_error = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                std::thread::sleep(self.config.backoff(attempt - 1));
            }
            match self.attempt(&body) {
                Attempt::Done(text) => return Ok(text),
                Attempt::Fail(e) => return Err(e),
                Attempt::Retry(e) => {
                    tracing::debug!(digest, attempt, "transient failure: {e}");
                    last_error = e;
                }
            }
        }
        Err(GatewayError::BackendUnreachable { attempts, last_error })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backoff_doubles_and_caps() {
        let mut c = HttpConfig::new("http://x");
        c.backoff_base = Duration::from_millis(100);
        c.backoff_max = Duration::from_millis(350);
        assert_eq!(c.backoff(0), Duration::from_millis(100));
        assert_eq!(c.backoff(1), Duration::from_millis(200));
        assert_eq!(c.backoff(2), Duration::from_millis(350));
        assert_eq!(c.backoff(40), Duration::from_millis(350));
    }

    #[test]
    fn extracts_chat_and_completion_text() {
        let chat = r####"{"choices":[{"message":{"role":"assistant","content":"###The answer is: True"}}]}"####;
        assert_eq!(extract_text(ApiMode::Chat, chat).unwrap(), "###The answer is: True");
        let legacy = r#"{"choices":[{"text":"(A, r, B)"}]}"#;
        assert_eq!(extract_text(ApiMode::Completions, legacy).unwrap(), "(A, r, B)");
        assert!(matches!(extract_text(ApiMode::Chat, legacy), Err(GatewayError::ResponseMalformed(_))));
        assert!(matches!(extract_text(ApiMode::Chat, "nope"), Err(GatewayError::ResponseMalformed(_))));
    }

    #[test]
    fn endpoint_and_body_shape() {
        let b = HttpBackend::new(HttpConfig::new("http://localhost:8000/"));
        assert_eq!(b.endpoint(), "http://localhost:8000/v1/chat/completions");
        let mut req = GenerationRequest::new(super::super::Stage::Verdict, "m", "p");
        req.stop = Some(vec!["###".into()]);
        let body = b.body(&req);
        assert_eq!(body["messages"][0]["content"], "p");
        assert_eq!(body["max_tokens"], 2048);
        assert_eq!(body["temperature"], 0.0);
        assert_eq!(body["stop"][0], "###");
    }

    #[test]
    fn api_key_is_redacted() {
        std::env::set_var("ZEFAV_TEST_KEY_REDACT", "sk-secret");
        let mut c = HttpConfig::new("http://x");
        c.api_key_env = Some("ZEFAV_TEST_KEY_REDACT".into());
        let b = HttpBackend::new(c);
        let shown = format!("{b:?}");
        assert!(!shown.contains("sk-secret"));
        assert!(shown.contains("redacted"));
    }
}
