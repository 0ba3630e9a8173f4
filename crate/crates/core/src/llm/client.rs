use std::fmt;
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::ChatMessage;
use crate::error::{LabError, Result};

fn default_timeout_ms() -> u64 {
    30_000
}
fn default_retry_limit() -> u32 {
    2
}
fn default_in_flight() -> usize {
    4
}
fn default_model() -> String {
    "gpt-5.1-chat-latest".into()
}

fn default_backoff_ms() -> u64 {
    500
}

/// Endpoint and decoding settings. Credentials are kept out of this struct.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Ignored by [`LlmClient::from_env`], which reads `LAB_LLM_ENDPOINT`.
    #[serde(default)]
    pub endpoint: String,
    #[serde(default = "default_model")]
    pub model: String,
    /// `None` leaves the provider default in place.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    #[serde(default = "default_retry_limit")]
    pub retry_limit: u32,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
    #[serde(default = "default_backoff_ms")]
    pub backoff_base_ms: u64,
}

impl ModelConfig {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        ModelConfig {
            endpoint: endpoint.into(),
            model: model.into(),
            temperature: None,
            max_tokens: None,
            timeout_ms: default_timeout_ms(),
            retry_limit: default_retry_limit(),
            max_in_flight: default_in_flight(),
            backoff_base_ms: default_backoff_ms(),
        }
    }

    /// Reads `LAB_LLM_ENDPOINT` and `LAB_LLM_MODEL`.
    pub fn from_env() -> Result<Self> {
        let endpoint = std::env::var("LAB_LLM_ENDPOINT")
            .map_err(|_| LabError::Config("LAB_LLM_ENDPOINT is not set".into()))?;
        let model = std::env::var("LAB_LLM_MODEL").unwrap_or_else(|_| default_model());
        Ok(Self::new(endpoint, model))
    }

    pub fn validate(&self) -> Result<()> {
        if self.endpoint.is_empty() {
            return Err(LabError::Config("no endpoint configured".into()));
        }
        if self.timeout_ms == 0 {
            return Err(LabError::Config("timeout must be positive".into()));
        }
        if self.max_in_flight == 0 {
            return Err(LabError::Config("in-flight cap must be positive".into()));
        }
        Ok(())
    }

    /// Stable FNV-1a hash of the settings that shape replies, for provenance.
    pub fn config_hash(&self) -> String {
        let canonical = format!(
            "{}|{}|{:?}|{:?}",
            self.endpoint, self.model, self.temperature, self.max_tokens
        );
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in canonical.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        format!("{h:016x}")
    }

    /// Worst-case wall time of one `complete` call.
    pub fn time_budget(&self) -> Duration {
        let attempts = self.retry_limit as u64 + 1;
        let backoff: u64 = (0..self.retry_limit).map(|k| self.backoff_for(k + 1).as_millis() as u64).sum();
        Duration::from_millis(self.timeout_ms * attempts + backoff)
    }

    fn backoff_for(&self, attempt: u32) -> Duration {
        let factor = 1u64 << (attempt.saturating_sub(1)).min(10);
        Duration::from_millis(self.backoff_base_ms.saturating_mul(factor).min(30_000))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendError {
    /// Worth retrying: timeouts, connection failures, 429 and 5xx.
    Transient(String),
    /// Not worth retrying: authentication, bad request.
    Fatal(String),
    /// The endpoint answered but not with a chat completion.
    Protocol(String),
}

/// One request/response exchange with a chat endpoint.
pub trait ChatBackend: Send + Sync {
    fn send(&self, request: &ChatRequest, timeout: Duration) -> std::result::Result<String, BackendError>;
}

/// Chat-completions JSON over HTTP(S).
pub struct HttpBackend {
    endpoint: String,
    api_key: Option<String>,
}

impl fmt::Debug for HttpBackend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HttpBackend")
            .field("endpoint", &self.endpoint)
            .field("api_key", &self.api_key.as_ref().map(|_| "<redacted>"))
            .finish()
    }
}

impl HttpBackend {
    pub fn new(endpoint: impl Into<String>, api_key: Option<String>) -> Self {
        HttpBackend { endpoint: endpoint.into(), api_key }
    }

    /// Endpoint from the config, key from `LAB_LLM_KEY`.
    pub fn from_env(config: &ModelConfig) -> Self {
        Self::new(config.endpoint.clone(), std::env::var("LAB_LLM_KEY").ok())
    }
}

pub(crate) fn parse_completion(body: &Value) -> std::result::Result<String, BackendError> {
    body.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| BackendError::Protocol("response has no choices[0].message.content".into()))
}

impl ChatBackend for HttpBackend {
    fn send(&self, request: &ChatRequest, timeout: Duration) -> std::result::Result<String, BackendError> {
        let agent = ureq::AgentBuilder::new().timeout(timeout).build();
        let mut req = agent.post(&self.endpoint).set("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            req = req.set("Authorization", &format!("Bearer {key}"));
        }
        let payload = json!(request);
        match req.send_json(payload) {
            Ok(resp) => {
                let body: Value = resp
                    .into_json()
                    .map_err(|e| BackendError::Protocol(format!("unreadable body: {e}")))?;
                parse_completion(&body)
            }
            Err(ureq::Error::Status(code, _)) if code == 408 || code == 429 || code >= 500 => {
                Err(BackendError::Transient(format!("HTTP {code}")))
            }
            Err(ureq::Error::Status(code, _)) => Err(BackendError::Fatal(format!("HTTP {code}"))),
            Err(ureq::Error::Transport(t)) => Err(BackendError::Transient(t.to_string())),
        }
    }
}

struct InFlight {
    cap: usize,
    used: Mutex<usize>,
    freed: Condvar,
}

struct Permit<'a>(&'a InFlight);

impl InFlight {
    fn acquire(&self) -> Permit<'_> {
        let mut used = self.used.lock().unwrap_or_else(|e| e.into_inner());
        while *used >= self.cap {
            used = self.freed.wait(used).unwrap_or_else(|e| e.into_inner());
        }
        *used += 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut used = self.0.used.lock().unwrap_or_else(|e| e.into_inner());
        *used -= 1;
        self.0.freed.notify_one();
    }
}

/// Shareable client: retries with exponential backoff and caps concurrent requests.
pub struct LlmClient {
    config: ModelConfig,
    backend: Box<dyn ChatBackend>,
    gate: InFlight,
}

impl LlmClient {
    pub fn new(config: ModelConfig, backend: Box<dyn ChatBackend>) -> Result<Self> {
        config.validate()?;
        let gate = InFlight { cap: config.max_in_flight, used: Mutex::new(0), freed: Condvar::new() };
        Ok(LlmClient { config, backend, gate })
    }

    /// HTTP client for the endpoint in `LAB_LLM_ENDPOINT` with the key in
    /// `LAB_LLM_KEY`. `config` supplies decoding and retry settings; its model
    /// applies unless `LAB_LLM_MODEL` is set.
    pub fn from_env(config: Option<ModelConfig>) -> Result<Self> {
        let env = ModelConfig::from_env()?;
        let config = match config {
            Some(c) => ModelConfig {
                endpoint: env.endpoint,
                model: if std::env::var_os("LAB_LLM_MODEL").is_some() { env.model } else { c.model },
                ..c
            },
            None => env,
        };
        let backend = HttpBackend::from_env(&config);
        Self::new(config, Box::new(backend))
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    /// Send `messages` and return the assistant's reply text.
    pub fn complete(&self, messages: &[ChatMessage]) -> Result<String> {
        if messages.is_empty() {
            return Err(LabError::InvalidArgument("no messages to send".into()));
        }
        if let Some(bad) = messages.iter().find(|m| !m.is_valid()) {
            return Err(LabError::InvalidArgument(format!("empty {:?} message", bad.role)));
        }
        let request = ChatRequest {
            model: self.config.model.clone(),
            messages: messages.to_vec(),
            temperature: self.config.temperature,
            max_tokens: self.config.max_tokens,
        };
        let timeout = Duration::from_millis(self.config.timeout_ms);
        let _permit = self.gate.acquire();
        let mut attempt = 0u32;
        loop {
            attempt += 1;
            match self.backend.send(&request, timeout) {
                Ok(text) => return Ok(text),
                Err(BackendError::Protocol(detail)) => return Err(LabError::LlmProtocol(detail)),
                Err(BackendError::Fatal(detail)) => {
                    return Err(LabError::LlmTransport { attempts: attempt, detail })
                }
                Err(BackendError::Transient(detail)) => {
                    if attempt > self.config.retry_limit {
                        return Err(LabError::LlmTransport { attempts: attempt, detail });
                    }
                    log::debug!("llm attempt {attempt} failed ({detail}); backing off");
                    std::thread::sleep(self.config.backoff_for(attempt));
                }
            }
        }
    }
}
