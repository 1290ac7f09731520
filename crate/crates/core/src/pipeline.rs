//! Wiring of the value predictor and the type predictor into a [`Resolver`],
//! and per-snippet construction of backends.

use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::backend::{
    read_transcript, Backend, LiveBackend, LiveConfig, RecordingBackend, ReplayBackend, TranscriptError,
    UnavailableBackend,
};
use crate::predict::{predict_value, PromptBundle, ValueParams};
use crate::runtime::{Checker, HookQuery, Resolution, Resolver};
use crate::types::{classify, ClassifierBundle, ClassifyParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PipelineMode {
    /// Value predictor, then the type predictor once it gives up.
    Full,
    ValueOnly,
    TypeOnly,
}

impl PipelineMode {
    pub fn as_str(self) -> &'static str {
        match self {
            PipelineMode::Full => "full",
            PipelineMode::ValueOnly => "value_only",
            PipelineMode::TypeOnly => "type_only",
        }
    }
}

impl FromStr for PipelineMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.replace('-', "_").as_str() {
            "full" => Ok(PipelineMode::Full),
            "value_only" => Ok(PipelineMode::ValueOnly),
            "type_only" => Ok(PipelineMode::TypeOnly),
            _ => Err(format!("unknown pipeline {s:?} (expected full, value_only or type_only)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub t_max: u32,
    pub temperature: f64,
    pub value_max_tokens: u32,
    pub class_max_tokens: u32,
    pub top_p: Option<f64>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig { t_max: 5, temperature: 0.8, value_max_tokens: 512, class_max_tokens: 8, top_p: None }
    }
}

impl PipelineConfig {
    pub fn value_params(&self) -> ValueParams {
        ValueParams { t_max: self.t_max, temperature: self.temperature, max_tokens: self.value_max_tokens, top_p: self.top_p }
    }

    pub fn classify_params(&self) -> ClassifyParams {
        ClassifyParams { temperature: self.temperature, max_tokens: self.class_max_tokens, top_p: self.top_p }
    }
}

/// Both predictors share one backend.
#[derive(Clone)]
pub struct Pipeline {
    pub mode: PipelineMode,
    pub backend: Arc<dyn Backend>,
    pub prompts: Arc<PromptBundle>,
    pub classifier: Arc<ClassifierBundle>,
    pub config: PipelineConfig,
}

impl Pipeline {
    pub fn new(mode: PipelineMode, backend: Arc<dyn Backend>) -> Self {
        Pipeline {
            mode,
            backend,
            prompts: Arc::new(PromptBundle::builtin()),
            classifier: Arc::new(ClassifierBundle::builtin()),
            config: PipelineConfig::default(),
        }
    }

    fn dummy(&self, query: &HookQuery) -> Resolution {
        Resolution::Dummy(classify(query, self.backend.as_ref(), &self.classifier, self.config.classify_params()))
    }
}

impl Resolver for Pipeline {
    fn resolve(&self, query: &HookQuery, checker: &mut dyn Checker) -> Resolution {
        if self.mode == PipelineMode::TypeOnly {
            return self.dummy(query);
        }
        match predict_value(query, self.backend.as_ref(), &self.prompts, self.config.value_params(), checker) {
            Ok(p) => Resolution::Value { code: p.result_code },
            Err(e) => {
                log::debug!("iid {}: {e}", query.iid);
                if self.mode == PipelineMode::Full {
                    self.dummy(query)
                } else {
                    Resolution::Unresolved
                }
            }
        }
    }
}

#[derive(Clone)]
pub enum BackendSource {
    /// A transcript file replayed from the start for every run, or a
    /// directory holding `<id>.r<k>.jsonl` / `<id>.jsonl` per snippet.
    Replay(PathBuf),
    Live(LiveConfig),
    /// Live calls appended to `<dir>/<id>.r<k>.jsonl`.
    Record { config: LiveConfig, dir: PathBuf },
    /// One backend shared by every run.
    Fixed(Arc<dyn Backend>),
    Failing,
}

#[derive(Debug, thiserror::Error)]
pub enum SourceError {
    #[error(transparent)]
    Transcript(#[from] TranscriptError),
    #[error("cannot open transcript {path}: {source}")]
    Record { path: String, source: std::io::Error },
    #[error("{0}")]
    Backend(String),
}

/// Transcript for run `run` (1-based) of snippet `id` under a replay directory.
pub fn transcript_path(dir: &Path, id: &str, run: usize) -> Option<PathBuf> {
    let per_run = dir.join(format!("{id}.r{run}.jsonl"));
    if per_run.is_file() {
        return Some(per_run);
    }
    let shared = dir.join(format!("{id}.jsonl"));
    shared.is_file().then_some(shared)
}

impl BackendSource {
    pub fn open(&self, id: &str, run: usize) -> Result<Arc<dyn Backend>, SourceError> {
        Ok(match self {
            BackendSource::Replay(p) if p.is_dir() => match transcript_path(p, id, run) {
                Some(t) => Arc::new(ReplayBackend::new(read_transcript(&t)?)),
                None => Arc::new(ReplayBackend::new(Vec::new())),
            },
            BackendSource::Replay(p) => Arc::new(ReplayBackend::new(read_transcript(p)?)),
            BackendSource::Live(c) => Arc::new(LiveBackend::new(c.clone()).map_err(|e| SourceError::Backend(e.to_string()))?),
            BackendSource::Record { config, dir } => {
                let live = LiveBackend::new(config.clone()).map_err(|e| SourceError::Backend(e.to_string()))?;
                let path = dir.join(format!("{id}.r{run}.jsonl"));
                let err = |source| SourceError::Record { path: path.display().to_string(), source };
                if path.exists() {
                    std::fs::remove_file(&path).map_err(err)?;
                }
                Arc::new(RecordingBackend::new(live, &path).map_err(err)?)
            }
            BackendSource::Fixed(b) => b.clone(),
            BackendSource::Failing => Arc::new(UnavailableBackend),
        })
    }
}

/// Builds a fresh pipeline for every (snippet, run) pair so that no predictor
/// state crosses snippets.
#[derive(Clone)]
pub struct PipelineFactory {
    pub mode: PipelineMode,
    pub source: BackendSource,
    pub prompts: Arc<PromptBundle>,
    pub classifier: Arc<ClassifierBundle>,
    pub config: PipelineConfig,
}

impl PipelineFactory {
    pub fn new(mode: PipelineMode, source: BackendSource) -> Self {
        PipelineFactory {
            mode,
            source,
            prompts: Arc::new(PromptBundle::builtin()),
            classifier: Arc::new(ClassifierBundle::builtin()),
            config: PipelineConfig::default(),
        }
    }

    pub fn make(&self, id: &str, run: usize) -> Result<Pipeline, SourceError> {
        Ok(Pipeline {
            mode: self.mode,
            backend: self.source.open(id, run)?,
            prompts: self.prompts.clone(),
            classifier: self.classifier.clone(),
            config: self.config,
        })
    }
}
