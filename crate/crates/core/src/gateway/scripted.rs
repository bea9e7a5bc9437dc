use std::collections::{BTreeMap, VecDeque};
use std::path::Path;
use std::sync::Mutex;

use serde_json::Value;

use super::{estimate_tokens, ChatBackend, ChatRequest, ChatResponse, GatewayError};

/// Replays canned replies. A reply queued under an exact tag is used before
/// one queued under the tag's role.
#[derive(Default)]
pub struct ScriptedBackend {
    queues: Mutex<BTreeMap<String, VecDeque<String>>>,
    calls: Mutex<Vec<ChatRequest>>,
}

impl ScriptedBackend {
    pub fn new() -> Self {
        Self::default()
    }

    /// Queues `reply` for a role (`planner`) or a full tag (`planner:s1`).
    pub fn push(&self, key: impl Into<String>, reply: impl Into<String>) -> &Self {
        self.queues
            .lock()
            .expect("script lock")
            .entry(key.into())
            .or_default()
            .push_back(reply.into());
        self
    }

    /// Builder form of [`push`](Self::push).
    pub fn with(self, key: impl Into<String>, reply: impl Into<String>) -> Self {
        self.push(key, reply);
        self
    }

    /// Reads `{"role or tag": [reply, ...]}`. Non-string replies are sent as
    /// their JSON text.
    pub fn from_json(value: &Value) -> Result<Self, GatewayError> {
        let map = value
            .as_object()
            .ok_or_else(|| GatewayError::Config("script must be a JSON object of reply lists".into()))?;
        let backend = ScriptedBackend::new();
        for (key, replies) in map {
            let replies = replies
                .as_array()
                .ok_or_else(|| GatewayError::Config(format!("script entry {key} is not a list")))?;
            for reply in replies {
                match reply {
                    Value::String(s) => backend.push(key.clone(), s.clone()),
                    other => backend.push(key.clone(), other.to_string()),
                };
            }
        }
        Ok(backend)
    }

    pub fn from_file(path: &Path) -> Result<Self, GatewayError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| GatewayError::Config(format!("{}: {e}", path.display())))?;
        let value: Value =
            serde_json::from_str(&text).map_err(|e| GatewayError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&value)
    }

    /// Requests received so far, in order.
    pub fn calls(&self) -> Vec<ChatRequest> {
        self.calls.lock().expect("calls lock").clone()
    }

    pub fn remaining(&self) -> usize {
        self.queues.lock().expect("script lock").values().map(VecDeque::len).sum()
    }
}

impl ChatBackend for ScriptedBackend {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        request.check()?;
        self.calls.lock().expect("calls lock").push(request.clone());
        let mut queues = self.queues.lock().expect("script lock");
        let text = [request.tag.as_str(), request.role()]
            .into_iter()
            .find_map(|key| queues.get_mut(key).and_then(VecDeque::pop_front))
            .ok_or_else(|| GatewayError::ScriptExhausted(request.tag.clone()))?;
        Ok(ChatResponse {
            prompt_tokens: estimate_tokens(&request.system_text) + estimate_tokens(&request.user_text),
            completion_tokens: estimate_tokens(&text),
            text,
            latency_ms: 0,
            attempts: 1,
        })
    }
}
