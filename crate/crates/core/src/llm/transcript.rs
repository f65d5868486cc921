use super::{CompletionRequest, LlmError, Stage};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const TRANSCRIPT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub stage: Stage,
    pub request: CompletionRequest,
    pub response: String,
    pub timestamp: String,
}

/// Append-only log of one trial's model calls.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub entries: Vec<TranscriptEntry>,
}

#[derive(Serialize, Deserialize)]
struct TranscriptFile {
    version: u32,
    entries: Vec<TranscriptEntry>,
}

impl Transcript {
    pub fn stage_count(&self, stage: Stage) -> usize {
        self.entries.iter().filter(|e| e.stage == stage).count()
    }

    pub fn to_json(&self) -> String {
        let file = TranscriptFile { version: TRANSCRIPT_VERSION, entries: self.entries.clone() };
        serde_json::to_string_pretty(&file).expect("transcript serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, LlmError> {
        let v: serde_json::Value = serde_json::from_str(text).map_err(|e| LlmError::Malformed(e.to_string()))?;
        let found = v.get("version").and_then(|x| x.as_u64()).ok_or_else(|| LlmError::Malformed("missing version".into()))?;
        if found != TRANSCRIPT_VERSION as u64 {
            return Err(LlmError::Version { found: found as u32, expected: TRANSCRIPT_VERSION });
        }
        let file: TranscriptFile = serde_json::from_value(v).map_err(|e| LlmError::Malformed(e.to_string()))?;
        Ok(Transcript { entries: file.entries })
    }

    pub fn save(&self, path: &Path) -> Result<(), LlmError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, LlmError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
