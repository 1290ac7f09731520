//! The interactive value predictor: assign and fix prompts, reply parsing,
//! and the bounded generate, check, refine loop.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::backend::{Backend, CompletionRequest};
use crate::instrument::HookKind;
use crate::runtime::{Checker, HookQuery, LoadedValue};
use crate::types::AssetError;

pub const UNDEF_ELE: &str = "⟨UNDEF ELE⟩";
pub const UNDEF_ELE_TYPE: &str = "⟨UNDEF ELE TYPE⟩";
pub const ERR_MSG: &str = "⟨ERR MSG⟩";
pub const LAST_STEP_CODE: &str = "⟨LAST STEP CODE⟩";
pub const FAIL_EXEC_RES: &str = "⟨FAIL EXEC RES⟩";

const TASK_HEAD: &str = "Task: Complete and fix the given code to make it can be executed directly.\n\
Given code: Do not modify the given Python code or wrap it with function.\n";
const STEP_1: &str = "Step 1: Import needed module.\n";
const STEP_2: &str = "Step 2: Define all the needed classes, methods, or variables here in detail.\n";

const DEFAULT_VALUE_PROMPTS: &str = include_str!("../../assets/value_prompts.json");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptExample {
    pub input: String,
    pub output: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub role: String,
    pub examples: Vec<PromptExample>,
    pub assign_template: String,
    pub fix_template: String,
}

impl PromptBundle {
    pub fn builtin() -> PromptBundle {
        serde_json::from_str(DEFAULT_VALUE_PROMPTS).expect("bundled value prompt asset is valid")
    }

    pub fn load(path: &Path) -> Result<PromptBundle, AssetError> {
        let p = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| AssetError::Io { path: p.clone(), source: e })?;
        let b: PromptBundle = serde_json::from_str(&text).map_err(|e| AssetError::Json { path: p.clone(), source: e })?;
        b.validate().map_err(|message| AssetError::Invalid { path: p, message })?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.examples.len() != 6 {
            return Err(format!("expected 6 examples, found {}", self.examples.len()));
        }
        let role = self.role.to_lowercase();
        if !(role.contains("only") && role.contains("code")) {
            return Err("role lacks the output restriction".to_string());
        }
        if !(role.contains("one code block") && role.contains("backticks")) {
            return Err("role lacks the format restriction".to_string());
        }
        for slot in [UNDEF_ELE, UNDEF_ELE_TYPE, ERR_MSG] {
            if !self.assign_template.contains(slot) {
                return Err(format!("assign template lacks {slot}"));
            }
        }
        for slot in [LAST_STEP_CODE, FAIL_EXEC_RES] {
            if !self.fix_template.contains(slot) {
                return Err(format!("fix template lacks {slot}"));
            }
        }
        Ok(())
    }

    fn preamble(&self) -> String {
        let mut out = format!("{}\n", self.role.trim_end());
        for e in &self.examples {
            out.push('\n');
            out.push_str(e.input.trim_end());
            out.push('\n');
            out.push_str(e.output.trim_end());
            out.push('\n');
        }
        out
    }

    fn task(&self, query: &HookQuery, step3: &str) -> String {
        format!(
            "\n{TASK_HEAD}<{}>\n{STEP_1}{STEP_2}Step 3: {step3}\n",
            query.context_line
        )
    }
}

pub fn kind_label(kind: HookKind) -> &'static str {
    match kind {
        HookKind::VariableRead => "variable",
        HookKind::AttributeRead => "attribute",
        HookKind::Call => "function call",
    }
}

fn slot(v: &str) -> String {
    format!("<{v}>")
}

pub fn build_assign_prompt(bundle: &PromptBundle, query: &HookQuery) -> String {
    let step3 = bundle
        .assign_template
        .replace(UNDEF_ELE_TYPE, &slot(kind_label(query.kind)))
        .replace(UNDEF_ELE, &slot(&query.name))
        .replace(ERR_MSG, &slot(&query.error_message));
    bundle.preamble() + &bundle.task(query, &step3)
}

pub fn build_fix_prompt(bundle: &PromptBundle, query: &HookQuery, last_code: &str, fail_message: &str) -> String {
    let step3 = bundle
        .fix_template
        .replace(LAST_STEP_CODE, &slot(last_code))
        .replace(FAIL_EXEC_RES, &slot(fail_message));
    bundle.preamble() + &bundle.task(query, &step3)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("reply contains no code")]
pub struct EmptyReply;

fn is_info_string(s: &str) -> bool {
    s.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '+' | '.' | '-'))
}

/// Contents of the first backtick-fenced block, else the trimmed text.
pub fn parse_reply(text: &str) -> Result<String, EmptyReply> {
    let code = match text.find("```") {
        None => text.trim().to_string(),
        Some(open) => {
            let rest = &text[open + 3..];
            let body = match rest.find("```") {
                Some(close) => &rest[..close],
                None => rest,
            };
            match body.split_once('\n') {
                // single-line fence such as ```x = 1```
                None => body.trim().to_string(),
                Some((first, tail)) => {
                    if is_info_string(first.trim()) {
                        tail.trim_matches('\n').trim_end().to_string()
                    } else {
                        body.trim_matches('\n').trim_end().to_string()
                    }
                }
            }
        }
    };
    if code.trim().is_empty() {
        Err(EmptyReply)
    } else {
        Ok(code)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prediction {
    pub result_code: String,
    pub value: LoadedValue,
    pub iterations_used: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("no valid value after {iterations} attempts: {last_failure}")]
pub struct InvalidValueError {
    pub iterations: u32,
    pub last_failure: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueParams {
    pub t_max: u32,
    pub temperature: f64,
    pub max_tokens: u32,
    pub top_p: Option<f64>,
}

impl Default for ValueParams {
    fn default() -> Self {
        ValueParams { t_max: 5, temperature: 0.8, max_tokens: 512, top_p: None }
    }
}

/// Every iteration makes exactly one backend call. A backend error or a reply
/// without code spends the iteration and the same prompt is sent again; a
/// failed check turns the next prompt into a fix prompt for that code.
pub fn predict_value(
    query: &HookQuery,
    backend: &dyn Backend,
    bundle: &PromptBundle,
    params: ValueParams,
    checker: &mut dyn Checker,
) -> Result<Prediction, InvalidValueError> {
    let mut prompt = build_assign_prompt(bundle, query);
    let mut last_failure = String::from("no attempt made");
    for i in 1..=params.t_max {
        let req = CompletionRequest {
            prompt: prompt.clone(),
            temperature: params.temperature,
            max_tokens: params.max_tokens,
            stop: Vec::new(),
            top_p: params.top_p,
        };
        let reply = match backend.complete(&req) {
            Ok(r) => r,
            Err(e) => {
                last_failure = e.to_string();
                continue;
            }
        };
        let code = match parse_reply(&reply) {
            Ok(c) => c,
            Err(e) => {
                last_failure = e.to_string();
                continue;
            }
        };
        match checker.check(&code, query) {
            Ok(value) => return Ok(Prediction { result_code: code, value, iterations_used: i }),
            Err(f) => {
                prompt = build_fix_prompt(bundle, query, &code, &f.message);
                last_failure = f.message;
            }
        }
    }
    Err(InvalidValueError { iterations: params.t_max, last_failure })
}
