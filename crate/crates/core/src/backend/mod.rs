//! Completion backends: a chat-completions HTTP client, transcript replay,
//! recording, and call counting.

mod live;
mod replay;

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use live::{LiveBackend, LiveConfig};
pub use replay::ReplayBackend;

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionRequest {
    pub prompt: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub stop: Vec<String>,
    pub top_p: Option<f64>,
}

impl CompletionRequest {
    pub fn new(prompt: impl Into<String>) -> Self {
        CompletionRequest { prompt: prompt.into(), temperature: 0.8, max_tokens: 512, stop: Vec::new(), top_p: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BackendError {
    #[error("backend unavailable: {0}")]
    Unavailable(String),
    #[error("transcript exhausted")]
    TranscriptExhausted,
}

pub trait Backend: Send + Sync {
    fn complete(&self, req: &CompletionRequest) -> Result<String, BackendError>;
}

impl<B: Backend + ?Sized> Backend for Arc<B> {
    fn complete(&self, req: &CompletionRequest) -> Result<String, BackendError> {
        (**self).complete(req)
    }
}

pub fn prompt_digest(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMode {
    ExactPrompt,
    PromptDigest,
    Sequence,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    #[serde(rename = "match")]
    pub mode: MatchMode,
    #[serde(default)]
    pub key: String,
    pub reply: String,
}

impl TranscriptEntry {
    pub fn sequence(reply: impl Into<String>) -> Self {
        TranscriptEntry { mode: MatchMode::Sequence, key: String::new(), reply: reply.into() }
    }

    pub fn digest(prompt: &str, reply: impl Into<String>) -> Self {
        TranscriptEntry { mode: MatchMode::PromptDigest, key: prompt_digest(prompt), reply: reply.into() }
    }

    pub fn exact(prompt: impl Into<String>, reply: impl Into<String>) -> Self {
        TranscriptEntry { mode: MatchMode::ExactPrompt, key: prompt.into(), reply: reply.into() }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TranscriptError {
    #[error("cannot read transcript {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("transcript {path} line {line}: {source}")]
    Json { path: String, line: usize, source: serde_json::Error },
}

pub fn read_transcript(path: &Path) -> Result<Vec<TranscriptEntry>, TranscriptError> {
    let p = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| TranscriptError::Io { path: p.clone(), source: e })?;
    parse_transcript(&text).map_err(|(line, e)| TranscriptError::Json { path: p, line, source: e })
}

pub fn parse_transcript(text: &str) -> Result<Vec<TranscriptEntry>, (usize, serde_json::Error)> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| (i + 1, e)))
        .collect()
}

pub fn write_transcript(path: &Path, entries: &[TranscriptEntry]) -> std::io::Result<()> {
    let mut f = File::create(path)?;
    for e in entries {
        writeln!(f, "{}", serde_json::to_string(e).expect("entry serialises"))?;
    }
    Ok(())
}

/// Appends every successful exchange of the wrapped backend to a transcript
/// file as a `prompt_digest` entry.
pub struct RecordingBackend<B> {
    inner: B,
    path: PathBuf,
    file: Mutex<File>,
}

impl<B: Backend> RecordingBackend<B> {
    pub fn new(inner: B, path: impl Into<PathBuf>) -> std::io::Result<Self> {
        let path = path.into();
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(RecordingBackend { inner, path, file: Mutex::new(file) })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl<B: Backend> Backend for RecordingBackend<B> {
    fn complete(&self, req: &CompletionRequest) -> Result<String, BackendError> {
        let reply = self.inner.complete(req)?;
        let line = serde_json::to_string(&TranscriptEntry::digest(&req.prompt, reply.clone())).expect("entry serialises");
        let mut f = self.file.lock().unwrap_or_else(|p| p.into_inner());
        if let Err(e) = writeln!(f, "{line}").and_then(|_| f.flush()) {
            log::warn!("cannot append to transcript {}: {e}", self.path.display());
        }
        Ok(reply)
    }
}

/// Wraps a backend and keeps every prompt it was asked.
pub struct CountingBackend<B> {
    inner: B,
    prompts: Mutex<Vec<String>>,
}

impl<B: Backend> CountingBackend<B> {
    pub fn new(inner: B) -> Self {
        CountingBackend { inner, prompts: Mutex::new(Vec::new()) }
    }

    pub fn calls(&self) -> usize {
        self.prompts.lock().unwrap_or_else(|p| p.into_inner()).len()
    }

    pub fn prompts(&self) -> Vec<String> {
        self.prompts.lock().unwrap_or_else(|p| p.into_inner()).clone()
    }
}

impl<B: Backend> Backend for CountingBackend<B> {
    fn complete(&self, req: &CompletionRequest) -> Result<String, BackendError> {
        self.prompts.lock().unwrap_or_else(|p| p.into_inner()).push(req.prompt.clone());
        self.inner.complete(req)
    }
}

/// A backend whose every call fails as if the service were down.
#[derive(Debug, Clone, Copy, Default)]
pub struct UnavailableBackend;

impl Backend for UnavailableBackend {
    fn complete(&self, _req: &CompletionRequest) -> Result<String, BackendError> {
        Err(BackendError::Unavailable("no backend configured".to_string()))
    }
}
