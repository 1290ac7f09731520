use std::time::Duration;

use serde_json::{json, Value};

use super::{Backend, BackendError, CompletionRequest};

#[derive(Debug, Clone, PartialEq)]
pub struct LiveConfig {
    /// Base URL; `/chat/completions` is appended unless already present.
    pub endpoint: String,
    pub model: String,
    pub api_key: Option<String>,
    pub request_timeout: Duration,
    pub retries: u32,
    pub backoff: Duration,
}

impl Default for LiveConfig {
    fn default() -> Self {
        LiveConfig {
            endpoint: "http://127.0.0.1:8000/v1".to_string(),
            model: "local-model".to_string(),
            api_key: None,
            request_timeout: Duration::from_secs(120),
            retries: 2,
            backoff: Duration::from_millis(500),
        }
    }
}

impl LiveConfig {
    /// Reads `PARTEXEC_ENDPOINT`, `PARTEXEC_MODEL` and `PARTEXEC_API_KEY`.
    pub fn from_env() -> Self {
        let mut c = LiveConfig::default();
        if let Ok(v) = std::env::var("PARTEXEC_ENDPOINT") {
            c.endpoint = v;
        }
        if let Ok(v) = std::env::var("PARTEXEC_MODEL") {
            c.model = v;
        }
        c.api_key = std::env::var("PARTEXEC_API_KEY").ok().filter(|k| !k.is_empty());
        c
    }

    pub fn url(&self) -> String {
        let base = self.endpoint.trim_end_matches('/');
        if base.ends_with("/chat/completions") {
            base.to_string()
        } else {
            format!("{base}/chat/completions")
        }
    }
}

pub struct LiveBackend {
    config: LiveConfig,
    client: reqwest::blocking::Client,
}

enum Attempt {
    Retry(String),
    Fatal(String),
}

impl LiveBackend {
    pub fn new(config: LiveConfig) -> Result<Self, BackendError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.request_timeout)
            .build()
            .map_err(|e| BackendError::Unavailable(e.to_string()))?;
        Ok(LiveBackend { config, client })
    }

    pub fn config(&self) -> &LiveConfig {
        &self.config
    }

    pub fn body(&self, req: &CompletionRequest) -> Value {
        let mut body = json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": req.prompt}],
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
        });
        if !req.stop.is_empty() {
            body["stop"] = json!(req.stop);
        }
        if let Some(p) = req.top_p {
            body["top_p"] = json!(p);
        }
        body
    }

    fn attempt(&self, body: &Value) -> Result<String, Attempt> {
        let mut rb = self.client.post(self.config.url()).json(body);
        if let Some(k) = &self.config.api_key {
            rb = rb.bearer_auth(k);
        }
        let resp = rb.send().map_err(|e| Attempt::Retry(e.to_string()))?;
        let status = resp.status();
        if status.is_server_error() || status.as_u16() == 429 {
            return Err(Attempt::Retry(format!("HTTP {status}")));
        }
        if !status.is_success() {
            return Err(Attempt::Fatal(format!("HTTP {status}")));
        }
        let v: Value = resp.json().map_err(|e| Attempt::Fatal(format!("bad response body: {e}")))?;
        first_choice_text(&v).ok_or_else(|| Attempt::Fatal("response has no choices".to_string()))
    }
}

/// `choices[0].message.content`, or `choices[0].text` for completion-style servers.
pub fn first_choice_text(v: &Value) -> Option<String> {
    let c = v.get("choices")?.get(0)?;
    c.get("message")
        .and_then(|m| m.get("content"))
        .or_else(|| c.get("text"))
        .and_then(Value::as_str)
        .map(str::to_string)
}

impl Backend for LiveBackend {
    fn complete(&self, req: &CompletionRequest) -> Result<String, BackendError> {
        let body = self.body(req);
        let mut wait = self.config.backoff;
        let mut last = String::new();
        for i in 0..=self.config.retries {
            if i > 0 {
                std::thread::sleep(wait);
                wait *= 2;
            }
            match self.attempt(&body) {
                Ok(text) => return Ok(text),
                Err(Attempt::Fatal(m)) => return Err(BackendError::Unavailable(m)),
                Err(Attempt::Retry(m)) => {
                    log::debug!("live backend attempt {} failed: {m}", i + 1);
                    last = m;
                }
            }
        }
        Err(BackendError::Unavailable(last))
    }
}
