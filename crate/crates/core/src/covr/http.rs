//! Chat-completions client with base64 PNG attachments.

use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use base64::Engine as _;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{BackendError, BackendRequest, BackendResponse, MllmBackend};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HttpConfig {
    /// Base URL such as `https://host/v1`; `/chat/completions` is appended
    /// unless already present.
    pub api_base: String,
    #[serde(skip_serializing)]
    pub api_key: Option<String>,
    pub model: String,
    pub timeout_secs: u64,
    pub max_in_flight: usize,
}

pub const DEFAULT_MODEL: &str = "gpt-4o";

impl HttpConfig {
    pub fn new(api_base: impl Into<String>) -> Self {
        Self {
            api_base: api_base.into(),
            api_key: None,
            model: DEFAULT_MODEL.to_string(),
            timeout_secs: 60,
            max_in_flight: 4,
        }
    }

    /// Reads `VPI_API_BASE` (required), `VPI_API_KEY` and `VPI_MODEL`.
    pub fn from_env() -> Result<Self, BackendError> {
        let base = std::env::var("VPI_API_BASE")
            .map_err(|_| BackendError::Config("VPI_API_BASE is not set".into()))?;
        let mut cfg = Self::new(base);
        cfg.api_key = std::env::var("VPI_API_KEY").ok().filter(|k| !k.is_empty());
        if let Ok(model) = std::env::var("VPI_MODEL") {
            if !model.is_empty() {
                cfg.model = model;
            }
        }
        Ok(cfg)
    }

    pub fn endpoint(&self) -> String {
        let base = self.api_base.trim_end_matches('/');
        if base.ends_with("/chat/completions") {
            base.to_string()
        } else {
            format!("{base}/chat/completions")
        }
    }
}

/// Counting gate bounding requests in flight across all callers.
struct Gate {
    used: Mutex<usize>,
    freed: Condvar,
    limit: usize,
}

impl Gate {
    fn acquire(&self) -> GateGuard<'_> {
        let mut used = self.used.lock().expect("gate lock");
        while *used >= self.limit {
            used = self.freed.wait(used).expect("gate lock");
        }
        *used += 1;
        GateGuard(self)
    }
}

struct GateGuard<'a>(&'a Gate);

impl Drop for GateGuard<'_> {
    fn drop(&mut self) {
        *self.0.used.lock().expect("gate lock") -= 1;
        self.0.freed.notify_one();
    }
}

pub struct HttpBackend {
    config: HttpConfig,
    client: reqwest::blocking::Client,
    gate: Gate,
}

impl HttpBackend {
    pub fn new(config: HttpConfig) -> Result<Self, BackendError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| BackendError::Config(e.to_string()))?;
        let limit = config.max_in_flight.max(1);
        Ok(Self {
            config,
            client,
            gate: Gate {
                used: Mutex::new(0),
                freed: Condvar::new(),
                limit,
            },
        })
    }

    pub fn config(&self) -> &HttpConfig {
        &self.config
    }

    /// Request body in the chat-completions wire format.
    pub fn request_body(&self, request: &BackendRequest) -> Value {
        let b = &request.bundle;
        let mut content = vec![json!({"type": "text", "text": b.user})];
        let engine = base64::engine::general_purpose::STANDARD;
        for img in &b.images {
            content.push(json!({
                "type": "image_url",
                "image_url": {"url": format!("data:image/png;base64,{}", engine.encode(img))}
            }));
        }
        json!({
            "model": self.config.model,
            "temperature": request.decoding.temperature,
            "max_tokens": request.decoding.max_tokens,
            "messages": [
                {"role": "system", "content": b.system},
                {"role": "user", "content": content},
            ],
        })
    }
}

/// Extracts the assistant text from a chat-completions reply. Content may be
/// a string or a list of text parts.
fn reply_text(body: &Value) -> Option<String> {
    let content = body.pointer("/choices/0/message/content")?;
    match content {
        Value::String(s) => Some(s.clone()),
        Value::Array(parts) => Some(
            parts
                .iter()
                .filter_map(|p| p.get("text").and_then(Value::as_str))
                .collect::<Vec<_>>()
                .join(""),
        ),
        _ => None,
    }
}

impl MllmBackend for HttpBackend {
    fn complete(&self, request: &BackendRequest) -> Result<BackendResponse, BackendError> {
        let _slot = self.gate.acquire();
        let started = Instant::now();
        let mut req = self.client.post(self.config.endpoint()).json(&self.request_body(request));
        if let Some(key) = &self.config.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| BackendError::Transport(e.to_string()))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| BackendError::Transport(e.to_string()))?;
        if !status.is_success() {
            let body: String = text.chars().take(500).collect();
            return Err(BackendError::Status {
                status: status.as_u16(),
                body,
            });
        }
        let body: Value = serde_json::from_str(&text)
            .map_err(|e| BackendError::Transport(format!("invalid JSON reply: {e}")))?;
        let answer = reply_text(&body).unwrap_or_default();
        if answer.trim().is_empty() {
            return Err(BackendError::EmptyResponse);
        }
        let usage = |k: &str| body.pointer(&format!("/usage/{k}")).and_then(Value::as_u64);
        Ok(BackendResponse {
            text: answer,
            latency_ms: started.elapsed().as_millis() as u64,
            prompt_tokens: usage("prompt_tokens"),
            completion_tokens: usage("completion_tokens"),
        })
    }

    fn id(&self) -> String {
        format!("http({})", self.config.model)
    }

    fn max_concurrency(&self) -> usize {
        self.config.max_in_flight.max(1)
    }
}
