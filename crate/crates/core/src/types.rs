//! The sixteen abstract classes, their placeholder values, and the
//! few-shot classifier that picks one for an undefined element.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::backend::{Backend, CompletionRequest};
use crate::runtime::HookQuery;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AbstractClass {
    #[serde(rename = "None")]
    None_,
    Boolean,
    Integer,
    Float,
    String,
    List,
    Tuple,
    Set,
    Dictionary,
    Tensor,
    Array,
    DataFrame,
    Callable,
    Object,
    Resource,
    Others,
}

impl AbstractClass {
    pub const ALL: [AbstractClass; 16] = [
        AbstractClass::None_,
        AbstractClass::Boolean,
        AbstractClass::Integer,
        AbstractClass::Float,
        AbstractClass::String,
        AbstractClass::List,
        AbstractClass::Tuple,
        AbstractClass::Set,
        AbstractClass::Dictionary,
        AbstractClass::Tensor,
        AbstractClass::Array,
        AbstractClass::DataFrame,
        AbstractClass::Callable,
        AbstractClass::Object,
        AbstractClass::Resource,
        AbstractClass::Others,
    ];

    pub fn label(self) -> &'static str {
        match self {
            AbstractClass::None_ => "None",
            AbstractClass::Boolean => "Boolean",
            AbstractClass::Integer => "Integer",
            AbstractClass::Float => "Float",
            AbstractClass::String => "String",
            AbstractClass::List => "List",
            AbstractClass::Tuple => "Tuple",
            AbstractClass::Set => "Set",
            AbstractClass::Dictionary => "Dictionary",
            AbstractClass::Tensor => "Tensor",
            AbstractClass::Array => "Array",
            AbstractClass::DataFrame => "DataFrame",
            AbstractClass::Callable => "Callable",
            AbstractClass::Object => "Object",
            AbstractClass::Resource => "Resource",
            AbstractClass::Others => "Others",
        }
    }

    /// Maps a classifier reply to a tag: whitespace, backticks and trailing
    /// punctuation are stripped, then the first word is matched without case.
    /// Anything else is `Others`.
    pub fn from_reply(reply: &str) -> AbstractClass {
        let cleaned = reply.trim().trim_matches(|c: char| c == '`' || c.is_whitespace());
        let word = cleaned
            .split(|c: char| c.is_whitespace() || c == '`')
            .find(|w| !w.is_empty())
            .unwrap_or("")
            .trim_matches(|c: char| !c.is_alphanumeric());
        AbstractClass::ALL
            .into_iter()
            .find(|c| c.label().eq_ignore_ascii_case(word))
            .unwrap_or(AbstractClass::Others)
    }
}

impl fmt::Display for AbstractClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A placeholder value, described as the expression the worker evaluates to
/// build it. Each evaluation constructs a fresh object.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DummyValue {
    pub class: AbstractClass,
    pub expr: &'static str,
    /// Third-party module the expression needs; when it cannot be imported the
    /// worker injects `DummyObject()` and reports the downgrade.
    pub module: Option<&'static str>,
}

pub fn dummy_for(class: AbstractClass) -> DummyValue {
    use AbstractClass::*;
    let (expr, module) = match class {
        None_ => ("None", None),
        Boolean => ("True", None),
        Integer => ("1", None),
        Float => ("1.0", None),
        String => ("'a'", None),
        List => ("[DummyObject()]", None),
        Tuple => ("(DummyObject(),)", None),
        Set => ("{DummyObject()}", None),
        Dictionary => ("{'a': DummyObject()}", None),
        Tensor => ("torch.tensor([[1.0]])", Some("torch")),
        Array => ("numpy.array([1])", Some("numpy")),
        DataFrame => ("pandas.DataFrame({'a': [1]})", Some("pandas")),
        Callable => ("DummyCall", None),
        Object | Others => ("DummyObject()", None),
        Resource => ("DummyResource()", None),
    };
    DummyValue { class, expr, module }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassifierExample {
    pub code: String,
    pub word: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassifierBundle {
    pub role: String,
    pub restriction: String,
    pub examples: Vec<ClassifierExample>,
}

#[derive(Debug, thiserror::Error)]
pub enum AssetError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed asset {path}: {source}")]
    Json { path: String, source: serde_json::Error },
    #[error("asset {path}: {message}")]
    Invalid { path: String, message: String },
}

const DEFAULT_CLASSIFIER: &str = include_str!("../assets/classifier_prompts.json");

impl ClassifierBundle {
    pub fn builtin() -> ClassifierBundle {
        serde_json::from_str(DEFAULT_CLASSIFIER).expect("bundled classifier asset is valid")
    }

    pub fn load(path: &Path) -> Result<ClassifierBundle, AssetError> {
        let p = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| AssetError::Io { path: p.clone(), source: e })?;
        let b: ClassifierBundle =
            serde_json::from_str(&text).map_err(|e| AssetError::Json { path: p.clone(), source: e })?;
        b.validate().map_err(|message| AssetError::Invalid { path: p, message })?;
        Ok(b)
    }

    /// One example for each class except `Others`.
    pub fn validate(&self) -> Result<(), String> {
        if self.examples.len() != 15 {
            return Err(format!("expected 15 examples, found {}", self.examples.len()));
        }
        for c in AbstractClass::ALL.into_iter().filter(|c| *c != AbstractClass::Others) {
            if !self.examples.iter().any(|e| AbstractClass::from_reply(&e.label) == c) {
                return Err(format!("no example labelled {c}"));
            }
        }
        Ok(())
    }

    pub fn prompt(&self, query: &HookQuery) -> String {
        let mut out = format!("{}\n{}\n", self.role, self.restriction);
        for e in &self.examples {
            out.push_str(&format!("\nCode: {}\nWord: {}\nCategory: {}\n", e.code, e.word, e.label));
        }
        out.push_str(&format!("\nCode: {}\nWord: {}\nCategory:", query.context_line, query.name));
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyParams {
    pub temperature: f64,
    pub max_tokens: u32,
    pub top_p: Option<f64>,
}

impl Default for ClassifyParams {
    fn default() -> Self {
        ClassifyParams { temperature: 0.8, max_tokens: 8, top_p: None }
    }
}

/// Never fails: a backend error or an unrecognised reply yields `Others`.
pub fn classify(
    query: &HookQuery,
    backend: &dyn Backend,
    bundle: &ClassifierBundle,
    params: ClassifyParams,
) -> AbstractClass {
    let req = CompletionRequest {
        prompt: bundle.prompt(query),
        temperature: params.temperature,
        max_tokens: params.max_tokens,
        stop: vec!["\n".to_string()],
        top_p: params.top_p,
    };
    match backend.complete(&req) {
        Ok(reply) => AbstractClass::from_reply(&reply),
        Err(e) => {
            log::debug!("classifier backend failed: {e}");
            AbstractClass::Others
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reply_normalisation() {
        assert_eq!(AbstractClass::from_reply("List"), AbstractClass::List);
        assert_eq!(AbstractClass::from_reply("  `dataframe`\n"), AbstractClass::DataFrame);
        assert_eq!(AbstractClass::from_reply("Callable."), AbstractClass::Callable);
        assert_eq!(AbstractClass::from_reply("none of these"), AbstractClass::None_);
        assert_eq!(AbstractClass::from_reply("banana"), AbstractClass::Others);
        assert_eq!(AbstractClass::from_reply(""), AbstractClass::Others);
    }

    #[test]
    fn builtin_classifier_asset_is_complete() {
        let b = ClassifierBundle::builtin();
        b.validate().unwrap();
        assert!(b.role.starts_with("I want you to act as a classifier"));
    }

    #[test]
    fn labels_round_trip() {
        for c in AbstractClass::ALL {
            assert_eq!(AbstractClass::from_reply(c.label()), c);
        }
    }
}
