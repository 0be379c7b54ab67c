//! Cumulative prompt chains.
//!
//! The model is stateless, so every prompt carries the whole conversation so
//! far. Layout, for step k:
//!
//! ```text
//! <base body>
//!
//! PROMPT:
//! <rendered step 1>
//!
//! RESPONSE:
//! <response 1>
//!
//! PROMPT:
//! <rendered step k>
//! ```
//!
//! so the prompt sent at step k-1 is a prefix of the prompt sent at step k.

mod backend;
mod template;

pub use backend::{
    prompt_digest, read_transcript, write_transcript, BackendError, HttpBackend, LlmBackend,
    ModelParams, RecordingBackend, ReplayBackend, RetryPolicy, TranscriptEntry, API_KEY_ENV,
    DEFAULT_ENDPOINT, DEFAULT_MODEL,
};
pub use template::{
    bindings, Bindings, PromptSet, PromptTemplate, TemplateError, TemplateId, PLACEHOLDERS,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

const PROMPT_LABEL: &str = "\n\nPROMPT:\n";
const RESPONSE_LABEL: &str = "\n\nRESPONSE:\n";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub template: TemplateId,
    /// Full text sent to the backend.
    pub prompt: String,
    pub response: String,
}

/// Append-only transcript of one chain.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainContext {
    base: String,
    turns: Vec<Turn>,
}

impl ChainContext {
    pub fn new(base: &PromptTemplate) -> Self {
        ChainContext {
            base: base.body.clone(),
            turns: Vec::new(),
        }
    }

    pub fn turns(&self) -> &[Turn] {
        &self.turns
    }

    pub fn into_turns(self) -> Vec<Turn> {
        self.turns
    }

    /// The prompt that would be sent for a step whose rendered template is
    /// `rendered`.
    pub fn compose(&self, rendered: &str) -> String {
        match self.turns.last() {
            None => format!("{}{PROMPT_LABEL}{rendered}", self.base),
            Some(last) => format!(
                "{}{RESPONSE_LABEL}{}{PROMPT_LABEL}{rendered}",
                last.prompt, last.response
            ),
        }
    }
}

#[derive(Debug, Error)]
pub enum ChainError {
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("{step}: {source}")]
    Backend {
        step: TemplateId,
        #[source]
        source: BackendError,
    },
    #[error("{0}: empty response")]
    EmptyResponse(TemplateId),
}

/// Renders `template`, sends the cumulative prompt, and appends the turn.
/// On error the context is left unchanged.
pub fn run_step(
    backend: &dyn LlmBackend,
    ctx: &mut ChainContext,
    template: &PromptTemplate,
    bindings: &Bindings,
    params: &ModelParams,
) -> Result<String, ChainError> {
    let rendered = template.render(bindings)?;
    let prompt = ctx.compose(&rendered);
    let response = backend
        .complete(&prompt, params)
        .map_err(|source| ChainError::Backend {
            step: template.template_id,
            source,
        })?;
    if response.trim().is_empty() {
        return Err(ChainError::EmptyResponse(template.template_id));
    }
    ctx.turns.push(Turn {
        template: template.template_id,
        prompt,
        response: response.clone(),
    });
    Ok(response)
}

/// Checks the cumulative-embedding property over a list of turns.
pub fn is_cumulative(turns: &[Turn]) -> bool {
    turns
        .windows(2)
        .all(|w| w[1].prompt.contains(&w[0].prompt) && w[1].prompt.contains(&w[0].response))
}
