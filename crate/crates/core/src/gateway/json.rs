use std::sync::OnceLock;

use jsonschema::JSONSchema;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::{ChatBackend, ChatRequest, GatewayError};

pub const DEFAULT_MAX_REPAIRS: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SchemaId {
    Report,
    Plan,
    Reflection,
}

impl SchemaId {
    pub fn source(self) -> &'static str {
        match self {
            SchemaId::Report => include_str!("../../schemas/report.json"),
            SchemaId::Plan => include_str!("../../schemas/plan.json"),
            SchemaId::Reflection => include_str!("../../schemas/reflection.json"),
        }
    }

    fn compiled(self) -> &'static JSONSchema {
        static CELLS: [OnceLock<JSONSchema>; 3] = [OnceLock::new(), OnceLock::new(), OnceLock::new()];
        CELLS[self as usize].get_or_init(|| {
            let schema: Value = serde_json::from_str(self.source()).expect("bundled schema is JSON");
            JSONSchema::compile(&schema).expect("bundled schema compiles")
        })
    }
}

/// Validates `value` against a bundled schema, listing each failing field path.
pub fn validate_schema(value: &Value, schema: SchemaId) -> Result<(), Vec<String>> {
    schema.compiled().validate(value).map_err(|errors| {
        errors
            .map(|e| {
                let path = e.instance_path.to_string();
                let path = if path.is_empty() { "/".to_string() } else { path };
                format!("{path}: {e}")
            })
            .collect()
    })
}

/// End index (inclusive) of the balanced object opening at `start`.
fn balanced_end(bytes: &[u8], start: usize) -> Option<usize> {
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, &b) in bytes.iter().enumerate().skip(start) {
        if in_string {
            match b {
                _ if escaped => escaped = false,
                b'\\' => escaped = true,
                b'"' => in_string = false,
                _ => {}
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

/// Finds the first balanced JSON object in `text` that parses, ignoring code
/// fences and prose around it, and validates it against `schema`.
pub fn extract_json(text: &str, schema: SchemaId) -> Result<Value, GatewayError> {
    let bytes = text.as_bytes();
    let value = bytes
        .iter()
        .enumerate()
        .filter(|(_, &b)| b == b'{')
        .find_map(|(start, _)| {
            let end = balanced_end(bytes, start)?;
            serde_json::from_str::<Value>(&text[start..=end]).ok()
        })
        .ok_or(GatewayError::NoJsonFound)?;
    validate_schema(&value, schema).map_err(GatewayError::SchemaViolation)?;
    Ok(value)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum AttemptOutcome {
    Accepted,
    Rejected { errors: Vec<String> },
    BackendError { message: String },
}

/// One model call within a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttemptRecord {
    /// 1 for the first call, then one more per repair.
    pub attempt: u32,
    pub tag: String,
    pub system_text: String,
    pub user_text: String,
    /// SHA-256 of the system and user text.
    pub prompt_digest: String,
    pub response_text: Option<String>,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub latency_ms: u64,
    pub transport_attempts: u32,
    pub outcome: AttemptOutcome,
}

pub(crate) fn sha256_hex(parts: &[&str]) -> String {
    let mut hasher = Sha256::new();
    for (i, p) in parts.iter().enumerate() {
        if i > 0 {
            hasher.update(b"\n");
        }
        hasher.update(p.as_bytes());
    }
    hex::encode(hasher.finalize())
}

/// SHA-256 of a value's compact JSON text.
pub fn json_digest(value: &Value) -> String {
    sha256_hex(&[&value.to_string()])
}

fn repair_request(original: &ChatRequest, reply: &str, errors: &[String]) -> ChatRequest {
    let mut user = original.user_text.clone();
    user.push_str("\n\n=== REPAIR ===\nYour previous reply was rejected for these reasons:\n");
    for e in errors {
        user.push_str("- ");
        user.push_str(e);
        user.push('\n');
    }
    user.push_str("Previous reply:\n<previous_reply>\n");
    user.push_str(reply);
    user.push_str("\n</previous_reply>\nReply again with a single JSON object that fixes every problem listed.");
    ChatRequest {
        user_text: user,
        ..original.clone()
    }
}

/// Calls the backend until the reply parses, matches `schema` and passes
/// `check`, re-prompting with the errors at most `max_repairs` times. Every
/// attempt is appended to `log`, including the failing ones.
pub fn complete_validated<T>(
    backend: &dyn ChatBackend,
    request: &ChatRequest,
    schema: SchemaId,
    max_repairs: u32,
    check: impl Fn(Value) -> Result<T, Vec<String>>,
    log: &mut Vec<AttemptRecord>,
) -> Result<T, GatewayError> {
    let mut current = request.clone();
    let mut errors = Vec::new();
    for attempt in 1..=max_repairs + 1 {
        let digest = sha256_hex(&[&current.system_text, &current.user_text]);
        let mut record = AttemptRecord {
            attempt,
            tag: current.tag.clone(),
            system_text: current.system_text.clone(),
            user_text: current.user_text.clone(),
            prompt_digest: digest,
            response_text: None,
            prompt_tokens: 0,
            completion_tokens: 0,
            latency_ms: 0,
            transport_attempts: 0,
            outcome: AttemptOutcome::Accepted,
        };
        let response = match backend.complete(&current) {
            Ok(r) => r,
            Err(e) => {
                record.outcome = AttemptOutcome::BackendError { message: e.to_string() };
                log.push(record);
                return Err(e);
            }
        };
        record.response_text = Some(response.text.clone());
        record.prompt_tokens = response.prompt_tokens;
        record.completion_tokens = response.completion_tokens;
        record.latency_ms = response.latency_ms;
        record.transport_attempts = response.attempts;
        let result = match extract_json(&response.text, schema) {
            Ok(value) => check(value),
            Err(GatewayError::SchemaViolation(paths)) => Err(paths),
            Err(e) => Err(vec![e.to_string()]),
        };
        match result {
            Ok(value) => {
                log.push(record);
                return Ok(value);
            }
            Err(errs) => {
                log::debug!("{} attempt {attempt} rejected: {}", current.tag, errs.join("; "));
                record.outcome = AttemptOutcome::Rejected { errors: errs.clone() };
                log.push(record);
                current = repair_request(request, &response.text, &errs);
                errors = errs;
            }
        }
    }
    Err(GatewayError::ValidationFailedAfterRepairs {
        attempts: max_repairs + 1,
        errors,
    })
}
