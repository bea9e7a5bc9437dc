use std::sync::Arc;
use std::time::{Duration, Instant};

use serde_json::{json, Value};

use super::{estimate_tokens, BackendConfig, ChatBackend, ChatRequest, ChatResponse, GatewayError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransportErrorKind {
    Timeout,
    Connect,
    /// Not worth retrying, e.g. a malformed URL.
    Fatal,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransportError {
    pub kind: TransportErrorKind,
    pub message: String,
}

/// Sends one JSON POST and returns the status code and body. Implementations
/// must return non-2xx statuses as `Ok`.
pub trait HttpTransport: Send + Sync {
    fn post_json(
        &self,
        url: &str,
        bearer: Option<&str>,
        body: &Value,
        timeout: Duration,
    ) -> Result<(u16, String), TransportError>;
}

pub struct UreqTransport {
    agent: ureq::Agent,
}

impl UreqTransport {
    pub fn new() -> Self {
        UreqTransport {
            agent: ureq::AgentBuilder::new().build(),
        }
    }
}

impl Default for UreqTransport {
    fn default() -> Self {
        Self::new()
    }
}

impl HttpTransport for UreqTransport {
    fn post_json(
        &self,
        url: &str,
        bearer: Option<&str>,
        body: &Value,
        timeout: Duration,
    ) -> Result<(u16, String), TransportError> {
        let mut request = self.agent.post(url).timeout(timeout);
        if let Some(key) = bearer {
            request = request.set("Authorization", &format!("Bearer {key}"));
        }
        let read = |response: ureq::Response| {
            let status = response.status();
            response
                .into_string()
                .map(|text| (status, text))
                .map_err(|e| TransportError {
                    kind: TransportErrorKind::Timeout,
                    message: e.to_string(),
                })
        };
        match request.send_json(body) {
            Ok(response) => read(response),
            Err(ureq::Error::Status(_, response)) => read(response),
            Err(ureq::Error::Transport(t)) => {
                let kind = match t.kind() {
                    ureq::ErrorKind::Io => TransportErrorKind::Timeout,
                    ureq::ErrorKind::Dns | ureq::ErrorKind::ConnectionFailed | ureq::ErrorKind::ProxyConnect => {
                        TransportErrorKind::Connect
                    }
                    _ => TransportErrorKind::Fatal,
                };
                Err(TransportError {
                    kind,
                    message: t.to_string(),
                })
            }
        }
    }
}

/// OpenAI-style chat completion endpoint.
pub struct HttpBackend {
    config: BackendConfig,
    url: String,
    model: String,
    transport: Arc<dyn HttpTransport>,
}

impl HttpBackend {
    pub fn new(config: BackendConfig, transport: Arc<dyn HttpTransport>) -> Result<Self, GatewayError> {
        let (Some(base), Some(model)) = (config.base_url.clone(), config.model_name.clone()) else {
            return Err(GatewayError::Config("http backend needs base_url and model_name".into()));
        };
        Ok(HttpBackend {
            url: format!("{}/chat/completions", base.trim_end_matches('/')),
            model,
            config,
            transport,
        })
    }

    fn api_key(&self) -> Result<Option<String>, GatewayError> {
        match &self.config.api_key_env_var {
            None => Ok(None),
            Some(var) => std::env::var(var)
                .ok()
                .filter(|k| !k.is_empty())
                .map(Some)
                .ok_or_else(|| GatewayError::MissingApiKey(var.clone())),
        }
    }

    fn body(&self, request: &ChatRequest) -> Value {
        json!({
            "model": self.model,
            "messages": [
                {"role": "system", "content": request.system_text},
                {"role": "user", "content": request.user_text},
            ],
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        })
    }
}

fn usage_field(usage: &Value, names: [&str; 2]) -> Option<u64> {
    names.iter().find_map(|n| usage.get(*n).and_then(Value::as_u64))
}

/// Reads the reply text and token usage. Missing usage is estimated.
fn parse_reply(request: &ChatRequest, body: &str) -> Result<(String, u64, u64), GatewayError> {
    let value: Value = serde_json::from_str(body).map_err(|e| GatewayError::Protocol(e.to_string()))?;
    let text = value
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .ok_or_else(|| GatewayError::Protocol("no choices[0].message.content".into()))?
        .to_string();
    let usage = value.get("usage").cloned().unwrap_or(Value::Null);
    let prompt = usage_field(&usage, ["prompt_tokens", "input_tokens"]);
    let completion = usage_field(&usage, ["completion_tokens", "output_tokens"]);
    if prompt.is_none() || completion.is_none() {
        log::warn!("reply for {} carries no usage counts; estimating", request.tag);
    }
    let prompt = prompt.unwrap_or_else(|| estimate_tokens(&request.system_text) + estimate_tokens(&request.user_text));
    let completion = completion.unwrap_or_else(|| estimate_tokens(&text));
    Ok((text, prompt, completion))
}

impl ChatBackend for HttpBackend {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        request.check()?;
        let key = self.api_key()?;
        let body = self.body(request);
        let timeout = Duration::from_millis(self.config.timeout_ms);
        let max_attempts = self.config.max_retries + 1;
        let started = Instant::now();
        let mut last = String::new();
        for attempt in 1..=max_attempts {
            if attempt > 1 {
                let backoff = self.config.retry_backoff_ms.saturating_mul(1 << (attempt - 2).min(16));
                std::thread::sleep(Duration::from_millis(backoff));
            }
            match self.transport.post_json(&self.url, key.as_deref(), &body, timeout) {
                Ok((status, text)) if (200..300).contains(&status) => {
                    let (text, prompt_tokens, completion_tokens) = parse_reply(request, &text)?;
                    return Ok(ChatResponse {
                        text,
                        prompt_tokens,
                        completion_tokens,
                        latency_ms: started.elapsed().as_millis() as u64,
                        attempts: attempt,
                    });
                }
                Ok((status, _)) if status == 429 || status >= 500 => {
                    log::warn!("{}: HTTP {status} on attempt {attempt}", request.tag);
                    last = format!("HTTP {status}");
                }
                Ok((status, text)) => return Err(GatewayError::Http { status, body: text }),
                Err(e) if e.kind == TransportErrorKind::Fatal => {
                    return Err(GatewayError::RetriesExhausted {
                        attempts: attempt,
                        last: e.message,
                    })
                }
                Err(e) => {
                    log::warn!("{}: {} on attempt {attempt}", request.tag, e.message);
                    last = e.message;
                }
            }
        }
        Err(GatewayError::RetriesExhausted {
            attempts: max_attempts,
            last,
        })
    }
}
