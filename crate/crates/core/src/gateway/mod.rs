//! Chat-completion access: an HTTP backend, two deterministic mocks, strict
//! JSON extraction with schema validation, and a bounded repair loop.

mod http;
mod json;
mod limit;
mod rule;
mod scripted;

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use http::{HttpBackend, HttpTransport, TransportError, TransportErrorKind, UreqTransport};
pub use json::{
    complete_validated, extract_json, json_digest, validate_schema, AttemptOutcome, AttemptRecord, SchemaId,
    DEFAULT_MAX_REPAIRS,
};
pub use limit::RateLimited;
pub use rule::RuleBasedBackend;
pub use scripted::ScriptedBackend;

pub const DEFAULT_MAX_OUTPUT_TOKENS: u32 = 2048;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub system_text: String,
    pub user_text: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
    /// `role:session`, e.g. `planner:malpp-u0001`.
    pub tag: String,
}

impl ChatRequest {
    /// A request at temperature 0 with the default output budget.
    pub fn new(system_text: impl Into<String>, user_text: impl Into<String>, tag: impl Into<String>) -> Self {
        ChatRequest {
            system_text: system_text.into(),
            user_text: user_text.into(),
            temperature: 0.0,
            max_output_tokens: DEFAULT_MAX_OUTPUT_TOKENS,
            tag: tag.into(),
        }
    }

    pub fn role(&self) -> &str {
        self.tag.split_once(':').map_or(self.tag.as_str(), |(role, _)| role)
    }

    pub fn check(&self) -> Result<(), GatewayError> {
        if self.system_text.is_empty() || self.user_text.is_empty() {
            return Err(GatewayError::InvalidRequest("empty prompt text".into()));
        }
        if self.max_output_tokens == 0 {
            return Err(GatewayError::InvalidRequest("max_output_tokens must be positive".into()));
        }
        if !(self.temperature >= 0.0) {
            return Err(GatewayError::InvalidRequest(format!("temperature {}", self.temperature)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub text: String,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub latency_ms: u64,
    /// Transport attempts made, including retries.
    pub attempts: u32,
}

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("backend configuration: {0}")]
    Config(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("environment variable {0} holding the API key is not set")]
    MissingApiKey(String),
    #[error("gave up after {attempts} attempts: {last}")]
    RetriesExhausted { attempts: u32, last: String },
    #[error("HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("malformed backend response: {0}")]
    Protocol(String),
    #[error("no scripted response left for {0}")]
    ScriptExhausted(String),
    #[error("mock backend could not read the prompt: {0}")]
    MockInput(String),
    #[error("no JSON object found in reply")]
    NoJsonFound,
    #[error("reply violates schema at {}", .0.join(", "))]
    SchemaViolation(Vec<String>),
    #[error("reply still invalid after {attempts} attempts: {}", .errors.join("; "))]
    ValidationFailedAfterRepairs { attempts: u32, errors: Vec<String> },
}

impl GatewayError {
    /// Errors that come from the backend rather than from the reply content.
    pub fn is_backend_failure(&self) -> bool {
        matches!(
            self,
            GatewayError::Config(_)
                | GatewayError::MissingApiKey(_)
                | GatewayError::RetriesExhausted { .. }
                | GatewayError::Http { .. }
                | GatewayError::Protocol(_)
                | GatewayError::ScriptExhausted(_)
                | GatewayError::MockInput(_)
        )
    }
}

pub trait ChatBackend: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError>;
}

impl<B: ChatBackend + ?Sized> ChatBackend for Arc<B> {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        (**self).complete(request)
    }
}

impl<B: ChatBackend + ?Sized> ChatBackend for &B {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        (**self).complete(request)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    Http,
    MockScripted,
    #[default]
    #[serde(alias = "mock-rule")]
    MockRuleBased,
}

impl std::str::FromStr for BackendKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "http" => Ok(BackendKind::Http),
            "mock-scripted" | "scripted" => Ok(BackendKind::MockScripted),
            "mock-rule" | "mock-rule-based" | "rule" => Ok(BackendKind::MockRuleBased),
            other => Err(format!("unknown backend {other:?} (http, mock-scripted, mock-rule)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub base_url: Option<String>,
    pub model_name: Option<String>,
    /// Name of the environment variable holding the API key.
    pub api_key_env_var: Option<String>,
    pub timeout_ms: u64,
    pub max_retries: u32,
    pub retry_backoff_ms: u64,
    pub max_concurrency: usize,
    pub min_request_interval_ms: u64,
    /// Response script for the scripted mock.
    pub script_path: Option<PathBuf>,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            kind: BackendKind::MockRuleBased,
            base_url: None,
            model_name: None,
            api_key_env_var: None,
            timeout_ms: 60_000,
            max_retries: 3,
            retry_backoff_ms: 500,
            max_concurrency: 4,
            min_request_interval_ms: 0,
            script_path: None,
        }
    }
}

impl BackendConfig {
    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.kind == BackendKind::Http && (self.base_url.is_none() || self.model_name.is_none()) {
            return Err(GatewayError::Config("http backend needs base_url and model_name".into()));
        }
        if self.kind == BackendKind::MockScripted && self.script_path.is_none() {
            return Err(GatewayError::Config("scripted backend needs a script file".into()));
        }
        if self.max_concurrency == 0 {
            return Err(GatewayError::Config("max_concurrency must be at least 1".into()));
        }
        Ok(())
    }
}

/// Builds the configured backend behind the concurrency and rate limits.
/// `transport` replaces the real HTTP client, for tests.
pub fn build_backend(
    config: &BackendConfig,
    transport: Option<Arc<dyn HttpTransport>>,
) -> Result<Arc<dyn ChatBackend>, GatewayError> {
    config.validate()?;
    let inner: Arc<dyn ChatBackend> = match config.kind {
        BackendKind::Http => {
            let transport = transport.unwrap_or_else(|| Arc::new(UreqTransport::new()));
            Arc::new(HttpBackend::new(config.clone(), transport)?)
        }
        BackendKind::MockScripted => {
            let path = config.script_path.as_ref().expect("validated");
            Arc::new(ScriptedBackend::from_file(path)?)
        }
        BackendKind::MockRuleBased => Arc::new(RuleBasedBackend::new()),
    };
    Ok(Arc::new(RateLimited::new(
        inner,
        config.max_concurrency,
        std::time::Duration::from_millis(config.min_request_interval_ms),
    )))
}

/// Rough token count used when a backend reports none: one token per four
/// characters.
pub fn estimate_tokens(text: &str) -> u64 {
    (text.chars().count() as u64).div_ceil(4)
}
