use std::path::PathBuf;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::gateway::AttemptRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SessionState {
    Analyze,
    Plan,
    Reflect,
}

impl SessionState {
    fn letter(self) -> char {
        match self {
            SessionState::Analyze => 'A',
            SessionState::Plan => 'P',
            SessionState::Reflect => 'R',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptStep {
    /// Order of the step within the session, from 1.
    pub seq: u32,
    pub state: SessionState,
    pub role: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan_version: Option<u32>,
    pub attempts: Vec<AttemptRecord>,
    /// Parsed reply, absent when the step failed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<Value>,
    /// SHA-256 of the payload's compact JSON.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload_digest: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SessionOutcome {
    InProgress,
    Accepted,
    AdoptedByDefault,
    AdoptedWithoutReflection,
    SingleCall,
    Failed { error: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentTranscript {
    pub session_id: String,
    pub learner_id: String,
    pub label: String,
    pub steps: Vec<TranscriptStep>,
    pub outcome: SessionOutcome,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

impl AgentTranscript {
    pub fn new(session_id: impl Into<String>, learner_id: impl Into<String>, label: impl Into<String>) -> Self {
        AgentTranscript {
            session_id: session_id.into(),
            learner_id: learner_id.into(),
            label: label.into(),
            steps: Vec::new(),
            outcome: SessionOutcome::InProgress,
            prompt_tokens: 0,
            completion_tokens: 0,
        }
    }

    pub fn push(
        &mut self,
        state: SessionState,
        role: &str,
        plan_version: Option<u32>,
        attempts: Vec<AttemptRecord>,
        payload: Option<Value>,
    ) {
        self.prompt_tokens += attempts.iter().map(|a| a.prompt_tokens).sum::<u64>();
        self.completion_tokens += attempts.iter().map(|a| a.completion_tokens).sum::<u64>();
        let payload_digest = payload
            .as_ref()
            .map(crate::gateway::json_digest);
        self.steps.push(TranscriptStep {
            seq: self.steps.len() as u32 + 1,
            state,
            role: role.to_string(),
            plan_version,
            attempts,
            payload,
            payload_digest,
        });
    }

    pub fn count(&self, state: SessionState) -> usize {
        self.steps.iter().filter(|s| s.state == state).count()
    }

    /// States as letters, e.g. `APRPR`.
    pub fn state_sequence(&self) -> String {
        self.steps.iter().map(|s| s.state.letter()).collect()
    }

    /// Model calls across the session, repairs included.
    pub fn model_calls(&self) -> usize {
        self.steps.iter().map(|s| s.attempts.len()).sum()
    }

    pub fn total_tokens(&self) -> u64 {
        self.prompt_tokens + self.completion_tokens
    }
}

/// Receives finished transcripts; must accept calls from several sessions
/// at once.
pub trait TranscriptSink: Send + Sync {
    fn write(&self, transcript: &AgentTranscript) -> std::io::Result<()>;
}

/// Writes `{dir}/{session_id}.json`, one file per session.
pub struct DirSink {
    dir: PathBuf,
}

impl DirSink {
    pub fn new(dir: impl Into<PathBuf>) -> std::io::Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        Ok(DirSink { dir })
    }
}

impl TranscriptSink for DirSink {
    fn write(&self, transcript: &AgentTranscript) -> std::io::Result<()> {
        let path = self.dir.join(format!("{}.json", transcript.session_id));
        let text = serde_json::to_string_pretty(transcript).map_err(std::io::Error::other)?;
        std::fs::write(path, text)
    }
}

#[derive(Default)]
pub struct MemorySink {
    transcripts: Mutex<Vec<AgentTranscript>>,
}

impl MemorySink {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn take(&self) -> Vec<AgentTranscript> {
        std::mem::take(&mut *self.transcripts.lock().expect("sink lock"))
    }
}

impl TranscriptSink for MemorySink {
    fn write(&self, transcript: &AgentTranscript) -> std::io::Result<()> {
        self.transcripts.lock().expect("sink lock").push(transcript.clone());
        Ok(())
    }
}
