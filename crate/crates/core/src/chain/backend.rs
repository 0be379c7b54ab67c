//! LLM backends: chat-completions over HTTP, transcript replay, and a
//! recording wrapper that produces replay transcripts.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const API_KEY_ENV: &str = "LEXIFORGE_API_KEY";
pub const DEFAULT_ENDPOINT: &str = "https://api.openai.com/v1/chat/completions";
pub const DEFAULT_MODEL: &str = "gpt-3.5-turbo";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub model_name: String,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            model_name: DEFAULT_MODEL.to_string(),
            temperature: 0.0,
            max_tokens: 512,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.model_name.trim().is_empty() {
            return Err("model name is empty".into());
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(format!(
                "temperature {} must be a finite number >= 0",
                self.temperature
            ));
        }
        if self.max_tokens == 0 {
            return Err("max_tokens must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("prompt not in transcript (sha256 {digest})")]
    Unrecorded { digest: String },
    #[error("recorded params {recorded:?} differ from requested {requested:?}")]
    ParamsMismatch {
        recorded: ModelParams,
        requested: ModelParams,
    },
    #[error("HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("malformed completion response: {0}")]
    Malformed(String),
    #[error("transcript error: {0}")]
    Transcript(String),
}

impl BackendError {
    fn retryable(&self) -> bool {
        match self {
            BackendError::Transport(_) => true,
            BackendError::Http { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

/// Text-completion service. Implementations must be shareable across the
/// per-MWE branches of a run.
pub trait LlmBackend: Send + Sync {
    fn complete(&self, prompt: &str, params: &ModelParams) -> Result<String, BackendError>;
}

impl<B: LlmBackend + ?Sized> LlmBackend for &B {
    fn complete(&self, prompt: &str, params: &ModelParams) -> Result<String, BackendError> {
        (**self).complete(prompt, params)
    }
}

impl<B: LlmBackend + ?Sized> LlmBackend for Box<B> {
    fn complete(&self, prompt: &str, params: &ModelParams) -> Result<String, BackendError> {
        (**self).complete(prompt, params)
    }
}

pub fn prompt_digest(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TranscriptEntry {
    pub prompt_sha256: String,
    pub prompt: String,
    pub response: String,
    pub params: ModelParams,
}

pub fn read_transcript(path: impl AsRef<Path>) -> Result<Vec<TranscriptEntry>, BackendError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| BackendError::Transcript(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| BackendError::Transcript(format!("{}: {e}", path.display())))
}

pub fn write_transcript(
    path: impl AsRef<Path>,
    entries: &[TranscriptEntry],
) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(entries).map_err(std::io::Error::other)?;
    text.push('\n');
    std::fs::write(path, text)
}

/// Answers prompts by exact lookup in a recorded transcript.
#[derive(Clone, Debug)]
pub struct ReplayBackend {
    entries: HashMap<String, TranscriptEntry>,
}

impl ReplayBackend {
    pub fn new(entries: Vec<TranscriptEntry>) -> Result<Self, BackendError> {
        let mut map = HashMap::new();
        for e in entries {
            let digest = prompt_digest(&e.prompt);
            if digest != e.prompt_sha256 {
                return Err(BackendError::Transcript(format!(
                    "entry digest {} does not match its prompt ({digest})",
                    e.prompt_sha256
                )));
            }
            if let Some(prev) = map.get(&digest) {
                let prev: &TranscriptEntry = prev;
                if prev.response != e.response {
                    return Err(BackendError::Transcript(format!(
                        "prompt {digest} recorded twice with different responses"
                    )));
                }
            }
            map.insert(digest, e);
        }
        Ok(ReplayBackend { entries: map })
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, BackendError> {
        Self::new(read_transcript(path)?)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl LlmBackend for ReplayBackend {
    fn complete(&self, prompt: &str, params: &ModelParams) -> Result<String, BackendError> {
        let digest = prompt_digest(prompt);
        let entry = self
            .entries
            .get(&digest)
            .filter(|e| e.prompt == prompt)
            .ok_or(BackendError::Unrecorded { digest })?;
        if &entry.params != params {
            return Err(BackendError::ParamsMismatch {
                recorded: entry.params.clone(),
                requested: params.clone(),
            });
        }
        Ok(entry.response.clone())
    }
}

/// Passes prompts through to `inner` and keeps every successful exchange.
pub struct RecordingBackend<B> {
    inner: B,
    entries: Mutex<BTreeMap<String, TranscriptEntry>>,
}

impl<B: LlmBackend> RecordingBackend<B> {
    pub fn new(inner: B) -> Self {
        RecordingBackend {
            inner,
            entries: Mutex::new(BTreeMap::new()),
        }
    }

    /// Recorded exchanges, one per distinct prompt, sorted by prompt text.
    pub fn entries(&self) -> Vec<TranscriptEntry> {
        self.entries
            .lock()
            .expect("recorder lock")
            .values()
            .cloned()
            .collect()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        write_transcript(path, &self.entries())
    }
}

impl<B: LlmBackend> LlmBackend for RecordingBackend<B> {
    fn complete(&self, prompt: &str, params: &ModelParams) -> Result<String, BackendError> {
        let response = self.inner.complete(prompt, params)?;
        self.entries
            .lock()
            .expect("recorder lock")
            .entry(prompt.to_string())
            .or_insert_with(|| TranscriptEntry {
                prompt_sha256: prompt_digest(prompt),
                prompt: prompt.to_string(),
                response: response.clone(),
                params: params.clone(),
            });
        Ok(response)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub initial_backoff: Duration,
    /// Upper bound on a server-requested Retry-After wait.
    pub max_backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            attempts: 3,
            initial_backoff: Duration::from_secs(1),
            max_backoff: Duration::from_secs(30),
        }
    }
}

/// Chat-completions client. Requests are independent, so one client serves
/// concurrent chains.
pub struct HttpBackend {
    client: reqwest::blocking::Client,
    endpoint: String,
    api_key: Option<String>,
    retry: RetryPolicy,
}

impl HttpBackend {
    pub fn new(
        endpoint: impl Into<String>,
        timeout: Duration,
        retry: RetryPolicy,
    ) -> Result<Self, BackendError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        Ok(HttpBackend {
            client,
            endpoint: endpoint.into(),
            api_key: std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty()),
            retry,
        })
    }

    pub fn with_api_key(mut self, key: Option<String>) -> Self {
        self.api_key = key;
        self
    }

    fn attempt(
        &self,
        prompt: &str,
        params: &ModelParams,
    ) -> Result<String, (BackendError, Option<Duration>)> {
        let body = json!({
            "model": params.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": params.temperature,
            "max_tokens": params.max_tokens,
        });
        let mut req = self.client.post(&self.endpoint).json(&body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req
            .send()
            .map_err(|e| (BackendError::Transport(e.to_string()), None))?;
        let status = resp.status();
        if !status.is_success() {
            let retry_after = resp
                .headers()
                .get(reqwest::header::RETRY_AFTER)
                .and_then(|v| v.to_str().ok())
                .and_then(|v| v.trim().parse::<u64>().ok())
                .map(Duration::from_secs);
            let body = resp.text().unwrap_or_default();
            return Err((
                BackendError::Http {
                    status: status.as_u16(),
                    body,
                },
                retry_after,
            ));
        }
        let value: serde_json::Value = resp
            .json()
            .map_err(|e| (BackendError::Malformed(e.to_string()), None))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| {
                (
                    BackendError::Malformed("no choices[0].message.content".into()),
                    None,
                )
            })
    }
}

impl LlmBackend for HttpBackend {
    fn complete(&self, prompt: &str, params: &ModelParams) -> Result<String, BackendError> {
        let mut backoff = self.retry.initial_backoff;
        let mut attempt = 1;
        loop {
            match self.attempt(prompt, params) {
                Ok(text) => return Ok(text),
                Err((err, retry_after)) => {
                    if !err.retryable() || attempt >= self.retry.attempts {
                        return Err(err);
                    }
                    let wait = retry_after.map_or(backoff, |d| d.min(self.retry.max_backoff));
                    log::warn!(
                        "LLM request attempt {attempt} failed ({err}); retrying in {wait:?}"
                    );
                    std::thread::sleep(wait);
                    backoff *= 2;
                    attempt += 1;
                }
            }
        }
    }
}
