//! Chat-completion client.
//!
//! Request: `POST <endpoint>` with `{"model": ..., "messages": [{"role", "content"}]}`
//! and a bearer token. Reply: `{"choices": [{"message": {"content": ...}}]}`.

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::ChatMessage;

pub const ENV_ENDPOINT: &str = "CEPH_LLM_ENDPOINT";
pub const ENV_MODEL: &str = "CEPH_LLM_MODEL";
pub const ENV_API_KEY: &str = "CEPH_LLM_API_KEY";
pub const ENV_TIMEOUT_S: &str = "CEPH_LLM_TIMEOUT_S";
pub const ENV_FALLBACK: &str = "CEPH_LLM_FALLBACK";

const DEFAULT_TIMEOUT_S: u64 = 30;

/// A credential. Its value never appears in `Debug` output and it cannot be serialized.
#[derive(Clone, PartialEq, Eq)]
pub struct Secret(String);

impl Secret {
    pub fn new(value: impl Into<String>) -> Self {
        Secret(value.into())
    }

    pub fn expose(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Secret {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Secret(<redacted>)")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FallbackPolicy {
    /// Answer with the offline responder when the backend fails.
    #[default]
    Rule,
    /// Surface the failure to the caller.
    Error,
}

impl FromStr for FallbackPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rule" => Ok(FallbackPolicy::Rule),
            "error" => Ok(FallbackPolicy::Error),
            other => Err(format!("invalid fallback policy {other:?}, expected rule|error")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionBackendConfig {
    pub endpoint: String,
    pub model: String,
    pub api_key: Option<Secret>,
    pub timeout: Duration,
    pub fallback: FallbackPolicy,
}

impl Default for CompletionBackendConfig {
    fn default() -> Self {
        CompletionBackendConfig {
            endpoint: String::new(),
            model: String::new(),
            api_key: None,
            timeout: Duration::from_secs(DEFAULT_TIMEOUT_S),
            fallback: FallbackPolicy::Rule,
        }
    }
}

impl CompletionBackendConfig {
    /// Enabled iff an endpoint is set.
    pub fn enabled(&self) -> bool {
        !self.endpoint.is_empty()
    }

    pub fn from_env() -> Result<Self, String> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    /// Reads the `CEPH_LLM_*` variables through `lookup`.
    pub fn from_lookup(lookup: impl Fn(&str) -> Option<String>) -> Result<Self, String> {
        let get = |k: &str| lookup(k).map(|v| v.trim().to_string()).filter(|v| !v.is_empty());
        let mut cfg = CompletionBackendConfig::default();
        if let Some(endpoint) = get(ENV_ENDPOINT) {
            cfg.endpoint = endpoint;
        }
        if let Some(model) = get(ENV_MODEL) {
            cfg.model = model;
        }
        cfg.api_key = lookup(ENV_API_KEY).filter(|v| !v.is_empty()).map(Secret);
        if let Some(t) = get(ENV_TIMEOUT_S) {
            let secs: f64 = t.parse().map_err(|_| format!("{ENV_TIMEOUT_S}: invalid number {t:?}"))?;
            if !(secs.is_finite() && secs > 0.0) {
                return Err(format!("{ENV_TIMEOUT_S}: must be positive, got {t}"));
            }
            cfg.timeout = Duration::from_secs_f64(secs);
        }
        if let Some(f) = get(ENV_FALLBACK) {
            cfg.fallback = f.parse().map_err(|e| format!("{ENV_FALLBACK}: {e}"))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.enabled() && self.model.is_empty() {
            return Err(format!("{ENV_MODEL} is required when {ENV_ENDPOINT} is set"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BackendError {
    #[error("completion request failed: {0}")]
    Transport(String),
    #[error("completion endpoint returned HTTP {0}")]
    Status(u16),
    #[error("malformed completion response: {0}")]
    Malformed(String),
}

#[async_trait]
pub trait CompletionBackend: Send + Sync {
    async fn complete(&self, history: &[ChatMessage]) -> Result<String, BackendError>;
}

#[derive(Serialize)]
struct WireMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    messages: Vec<WireMessage<'a>>,
}

#[derive(Deserialize)]
struct WireReply {
    choices: Vec<WireChoice>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireReplyMessage,
}

#[derive(Deserialize)]
struct WireReplyMessage {
    content: String,
}

pub struct HttpBackend {
    client: reqwest::Client,
    endpoint: String,
    model: String,
    api_key: Option<Secret>,
}

impl fmt::Debug for HttpBackend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HttpBackend")
            .field("endpoint", &self.endpoint)
            .field("model", &self.model)
            .field("api_key", &self.api_key)
            .finish()
    }
}

impl HttpBackend {
    pub fn new(config: &CompletionBackendConfig) -> Result<Self, BackendError> {
        let client = reqwest::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| BackendError::Transport(e.without_url().to_string()))?;
        Ok(HttpBackend {
            client,
            endpoint: config.endpoint.clone(),
            model: config.model.clone(),
            api_key: config.api_key.clone(),
        })
    }
}

#[async_trait]
impl CompletionBackend for HttpBackend {
    async fn complete(&self, history: &[ChatMessage]) -> Result<String, BackendError> {
        let body = WireRequest {
            model: &self.model,
            messages: history
                .iter()
                .map(|m| WireMessage { role: m.role.as_str(), content: &m.content })
                .collect(),
        };
        let mut request = self.client.post(&self.endpoint).json(&body);
        if let Some(key) = &self.api_key {
            request = request.bearer_auth(key.expose());
        }
        let response = request
            .send()
            .await
            .map_err(|e| BackendError::Transport(e.without_url().to_string()))?;
        let status = response.status();
        if !status.is_success() {
            return Err(BackendError::Status(status.as_u16()));
        }
        let reply: WireReply = response
            .json()
            .await
            .map_err(|e| BackendError::Malformed(e.without_url().to_string()))?;
        let content = reply
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| BackendError::Malformed("no choices".to_string()))?;
        if content.is_empty() {
            return Err(BackendError::Malformed("empty content".to_string()));
        }
        Ok(content)
    }
}
