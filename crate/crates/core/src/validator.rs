//! LLM self-validation of candidate sentences.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{bindings, Bindings};
use crate::filter::{segment, DELIMITER};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourcePath {
    Llm,
    Corpus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Accepted,
    Rejected,
    Pending,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateMwe {
    pub mwe: String,
    pub source_path: SourcePath,
    pub candidate_sentences: Vec<String>,
    pub validated_sentences: Vec<String>,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl CandidateMwe {
    pub fn new(mwe: impl Into<String>, source_path: SourcePath) -> Self {
        CandidateMwe {
            mwe: mwe.into(),
            source_path,
            candidate_sentences: Vec::new(),
            validated_sentences: Vec::new(),
            verdict: Verdict::Pending,
            reason: None,
        }
    }

    pub fn reject(mut self, reason: impl Into<String>) -> Self {
        self.verdict = Verdict::Rejected;
        self.reason = Some(reason.into());
        self
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ValidationError {
    #[error("no candidate sentences for {0:?}")]
    NoCandidates(String),
}

/// Candidates rendered one per line, each introduced by the delimiter.
pub fn format_candidates(candidates: &[String]) -> String {
    candidates
        .iter()
        .map(|c| format!("{DELIMITER} {c}"))
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn format_seed_text(seed_sentences: &[String]) -> String {
    seed_sentences.join(" ")
}

pub fn build_validation_bindings(
    seed: &str,
    seed_sentences: &[String],
    mwe: &str,
    candidates: &[String],
) -> Result<Bindings, ValidationError> {
    if candidates.is_empty() {
        return Err(ValidationError::NoCandidates(mwe.to_string()));
    }
    Ok(bindings([
        ("seed", seed.to_string()),
        ("text", format_seed_text(seed_sentences)),
        ("mwe", mwe.to_string()),
        ("candidates", format_candidates(candidates)),
    ]))
}

/// Case-folded, whitespace-collapsed, without trailing punctuation.
pub fn normalize(sentence: &str) -> String {
    let collapsed = sentence
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase();
    collapsed
        .trim_end_matches(|c: char| {
            c.is_ascii_punctuation() || c.is_whitespace() || matches!(c, '’' | '”' | '…')
        })
        .to_string()
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationParse {
    /// Candidates confirmed by the response, in candidate order.
    pub validated: Vec<String>,
    /// Response segments that matched no candidate.
    pub unmatched: Vec<String>,
}

pub fn parse_validated(raw: &str, candidates: &[String]) -> ValidationParse {
    let segments: Vec<String> = segment(raw).into_iter().map(|s| s.text).collect();
    let seg_norm: Vec<String> = segments.iter().map(|s| normalize(s)).collect();
    let cand_norm: Vec<String> = candidates.iter().map(|c| normalize(c)).collect();
    let validated = candidates
        .iter()
        .zip(&cand_norm)
        .filter(|(_, n)| !n.is_empty() && seg_norm.contains(n))
        .map(|(c, _)| c.clone())
        .collect();
    let unmatched: Vec<String> = segments
        .iter()
        .zip(&seg_norm)
        .filter(|(_, n)| !cand_norm.contains(n))
        .map(|(s, _)| s.clone())
        .collect();
    for s in &unmatched {
        log::warn!("validation response segment matches no candidate: {s:?}");
    }
    ValidationParse {
        validated,
        unmatched,
    }
}

/// Accepts iff at least one sentence validated.
pub fn decide(mut candidate: CandidateMwe) -> CandidateMwe {
    if candidate.validated_sentences.is_empty() {
        candidate.verdict = Verdict::Rejected;
        if candidate.reason.is_none() {
            candidate.reason = Some("no candidate sentence validated".into());
        }
    } else {
        candidate.verdict = Verdict::Accepted;
        candidate.reason = None;
    }
    candidate
}
