//! Chat-completion backends: a live HTTP client, a fixture replay backend and
//! a scripted stub, plus per-trial transcript recording.

mod live;
mod replay;
mod transcript;

pub use live::{LiveBackend, LiveConfig};
pub use replay::{ReplayBackend, StubBackend};
pub use transcript::{Transcript, TranscriptEntry, TRANSCRIPT_VERSION};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        ChatMessage { role: Role::System, content: content.into() }
    }

    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage { role: Role::User, content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        ChatMessage { role: Role::Assistant, content: content.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub model_id: String,
    pub temperature: f64,
    pub messages: Vec<ChatMessage>,
    pub max_tokens: u32,
}

impl CompletionRequest {
    pub fn validate(&self) -> Result<(), LlmError> {
        if self.messages.is_empty() {
            return Err(LlmError::InvalidRequest("no messages".into()));
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(LlmError::InvalidRequest(format!("temperature {} outside [0, 2]", self.temperature)));
        }
        if let Some(m) = self.messages.iter().find(|m| m.role != Role::Assistant && m.content.trim().is_empty()) {
            return Err(LlmError::InvalidRequest(format!("empty {:?} message", m.role)));
        }
        Ok(())
    }

    /// Hex sha256 over the serialized message list.
    pub fn prompt_hash(&self) -> String {
        let bytes = serde_json::to_vec(&self.messages).expect("messages serialize");
        hex::encode(Sha256::digest(&bytes))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Analyzer,
    Planner,
    Calculator,
    Coder,
}

impl Stage {
    pub const ALL: [Stage; 4] = [Stage::Analyzer, Stage::Planner, Stage::Calculator, Stage::Coder];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Analyzer => "analyzer",
            Stage::Planner => "planner",
            Stage::Calculator => "calculator",
            Stage::Coder => "coder",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = LlmError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| LlmError::Malformed(format!("unknown stage `{s}`")))
    }
}

/// Identifies a call within a trial: which task and method the trial runs,
/// the stage, and how many calls that stage already made in this trial.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CallContext {
    pub task: String,
    pub method: String,
    pub stage: Stage,
    pub ordinal: usize,
}

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("replay miss: no fixture for {stage} call #{ordinal} of {task}/{method}")]
    ReplayMiss { task: String, method: String, stage: Stage, ordinal: usize },
    #[error("replay prompt hash mismatch for {stage} call #{ordinal}")]
    HashMismatch { stage: Stage, ordinal: usize },
    #[error("credential environment variable `{0}` is not set")]
    CredentialMissing(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("malformed file: {0}")]
    Malformed(String),
    #[error("unsupported transcript version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// A chat-completion provider. Implementations must be safe to call from
/// concurrent trials.
pub trait Backend: Send + Sync {
    fn complete(&self, ctx: &CallContext, request: &CompletionRequest) -> Result<String, LlmError>;
}

/// Per-trial call log wrapping a shared backend.
pub struct Session<'a> {
    backend: &'a dyn Backend,
    task: String,
    method: String,
    transcript: Transcript,
    counts: std::collections::BTreeMap<Stage, usize>,
    clock: fn() -> String,
}

fn wall_clock() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Micros, true)
}

impl<'a> Session<'a> {
    pub fn new(backend: &'a dyn Backend, task: &str, method: &str) -> Self {
        Session {
            backend,
            task: task.to_string(),
            method: method.to_string(),
            transcript: Transcript::default(),
            counts: Default::default(),
            clock: wall_clock,
        }
    }

    /// Replaces the timestamp source, e.g. with a constant for reproducible
    /// transcript files.
    pub fn with_clock(mut self, clock: fn() -> String) -> Self {
        self.clock = clock;
        self
    }

    pub fn complete(&mut self, stage: Stage, request: CompletionRequest) -> Result<String, LlmError> {
        request.validate()?;
        let ordinal = *self.counts.get(&stage).unwrap_or(&0);
        let ctx = CallContext { task: self.task.clone(), method: self.method.clone(), stage, ordinal };
        let response = self.backend.complete(&ctx, &request)?;
        self.counts.insert(stage, ordinal + 1);
        self.transcript.entries.push(TranscriptEntry { stage, request, response: response.clone(), timestamp: (self.clock)() });
        Ok(response)
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn into_transcript(self) -> Transcript {
        self.transcript
    }

    pub fn calls(&self) -> usize {
        self.transcript.entries.len()
    }
}
