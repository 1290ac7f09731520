use std::collections::{HashMap, VecDeque};
use std::sync::Mutex;

use super::{prompt_digest, Backend, BackendError, CompletionRequest, MatchMode, TranscriptEntry};

/// Answers from a transcript. Each entry is used once. A request takes the
/// first unused `exact_prompt` entry whose key is the prompt, else the first
/// unused `prompt_digest` entry whose key is the prompt's SHA-256, else the
/// next unused `sequence` entry.
pub struct ReplayBackend {
    state: Mutex<State>,
}

struct State {
    exact: HashMap<String, VecDeque<String>>,
    digest: HashMap<String, VecDeque<String>>,
    sequence: VecDeque<String>,
}

impl ReplayBackend {
    pub fn new(entries: Vec<TranscriptEntry>) -> Self {
        let mut st = State { exact: HashMap::new(), digest: HashMap::new(), sequence: VecDeque::new() };
        for e in entries {
            match e.mode {
                MatchMode::ExactPrompt => st.exact.entry(e.key).or_default().push_back(e.reply),
                MatchMode::PromptDigest => st.digest.entry(e.key.to_ascii_lowercase()).or_default().push_back(e.reply),
                MatchMode::Sequence => st.sequence.push_back(e.reply),
            }
        }
        ReplayBackend { state: Mutex::new(st) }
    }

    pub fn sequence<I, S>(replies: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        ReplayBackend::new(replies.into_iter().map(TranscriptEntry::sequence).collect())
    }

    pub fn remaining(&self) -> usize {
        let st = self.state.lock().unwrap_or_else(|p| p.into_inner());
        st.sequence.len() + st.exact.values().map(VecDeque::len).sum::<usize>() + st.digest.values().map(VecDeque::len).sum::<usize>()
    }
}

impl Backend for ReplayBackend {
    fn complete(&self, req: &CompletionRequest) -> Result<String, BackendError> {
        let mut st = self.state.lock().unwrap_or_else(|p| p.into_inner());
        if let Some(r) = st.exact.get_mut(&req.prompt).and_then(VecDeque::pop_front) {
            return Ok(r);
        }
        if !st.digest.is_empty() {
            if let Some(r) = st.digest.get_mut(&prompt_digest(&req.prompt)).and_then(VecDeque::pop_front) {
                return Ok(r);
            }
        }
        st.sequence.pop_front().ok_or(BackendError::TranscriptExhausted)
    }
}
