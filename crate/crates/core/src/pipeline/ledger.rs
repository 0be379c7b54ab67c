use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::config::RunConfig;
use super::PipelineError;
use crate::chain::{prompt_digest, PromptSet, TranscriptEntry, Turn};
use crate::corpus::Hit;
use crate::gmr::{Gmr, RoleDiagnostic, SemanticTemplate};
use crate::lexicon::LexSense;
use crate::validator::CandidateMwe;

pub const LEDGER_FORMAT_VERSION: u32 = 1;
pub const LEDGER_FILE: &str = "ledger.json";
pub const OUTPUT_LEXICON_FILE: &str = "lexicon.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    SeedTemplate,
    GmrInstantiation,
    Realization,
    MweGeneration,
    SentenceGeneration,
    CorpusSearch,
    Validation,
    Cloning,
    SeedExamples,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageFailure {
    pub stage: Stage,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mwe: Option<String>,
    pub message: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    /// A run-level stage failed; per-MWE work was not attempted.
    Aborted,
}

/// Content hashes of the run inputs. Paths are not part of the digest;
/// these are.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigests {
    pub lexicon_sha256: String,
    pub ontology_sha256: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corpus_sha256: Option<String>,
}

/// Everything recorded for one candidate MWE.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MweRecord {
    pub candidate: CandidateMwe,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub corpus_hits: Vec<Hit>,
    /// Validation-response segments that matched no candidate.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unmatched_validation: Vec<String>,
    /// The full chain for this MWE, starting with the MWE-generation turn.
    pub transcript: Vec<Turn>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReviewKind {
    Accept,
    Reject,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewEntry {
    pub action: ReviewKind,
    pub sense_id: String,
    pub vetted_lexicon: String,
    pub at: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunLedger {
    pub format_version: u32,
    pub run_id: String,
    pub config: RunConfig,
    pub inputs: InputDigests,
    pub templates: PromptSet,
    pub semantic_template: Option<SemanticTemplate>,
    pub gmrs: Vec<Gmr>,
    pub gmr_diagnostics: Vec<RoleDiagnostic>,
    pub seed_sentences: Vec<String>,
    pub mwe_generation: Option<Turn>,
    pub mwe_list: Vec<String>,
    pub mwe_list_notes: Vec<String>,
    pub candidates: Vec<MweRecord>,
    pub learned_sense_ids: Vec<String>,
    pub learned_senses: Vec<LexSense>,
    pub seed_examples_added: Vec<String>,
    pub notes: Vec<String>,
    pub failures: Vec<StageFailure>,
    pub status: RunStatus,
    pub output_lexicon: String,
    pub started_at: Option<String>,
    pub finished_at: Option<String>,
    #[serde(default)]
    pub review_log: Vec<ReviewEntry>,
    pub digest: String,
}

/// Config fields that locate resources or select the transport. They do
/// not affect the learned content and are left out of run ids and digests.
fn strip_config(config: &mut Value) {
    if let Some(obj) = config.as_object_mut() {
        for key in [
            "lexicon",
            "ontology",
            "corpus",
            "corpus_cache",
            "templates",
            "backend",
            "out_dir",
        ] {
            obj.remove(key);
        }
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Compact JSON with object keys in sorted order.
pub fn canonical_json(value: &Value) -> String {
    fn sort(v: &Value) -> Value {
        match v {
            Value::Object(m) => {
                let mut entries: Vec<(&String, &Value)> = m.iter().collect();
                entries.sort_by(|a, b| a.0.cmp(b.0));
                Value::Object(
                    entries
                        .into_iter()
                        .map(|(k, v)| (k.clone(), sort(v)))
                        .collect(),
                )
            }
            Value::Array(a) => Value::Array(a.iter().map(sort).collect()),
            other => other.clone(),
        }
    }
    sort(value).to_string()
}

/// `run-` plus a hash prefix of the content-relevant config and inputs.
pub fn run_id(config: &RunConfig, inputs: &InputDigests, templates: &PromptSet) -> String {
    let mut cfg = serde_json::to_value(config).expect("config serializes");
    strip_config(&mut cfg);
    let key = serde_json::json!({
        "config": cfg,
        "inputs": inputs,
        "templates": templates,
        "format_version": LEDGER_FORMAT_VERSION,
    });
    format!("run-{}", &sha256_hex(canonical_json(&key).as_bytes())[..16])
}

impl RunLedger {
    pub fn compute_digest(&self) -> String {
        let mut v = serde_json::to_value(self).expect("ledger serializes");
        let obj = v.as_object_mut().expect("ledger is an object");
        for key in ["started_at", "finished_at", "review_log", "digest"] {
            obj.remove(key);
        }
        if let Some(cfg) = obj.get_mut("config") {
            strip_config(cfg);
        }
        sha256_hex(canonical_json(&v).as_bytes())
    }

    pub fn seal(&mut self) {
        self.digest = self.compute_digest();
    }

    pub fn digest_is_valid(&self) -> bool {
        self.digest == self.compute_digest()
    }

    /// Pretty JSON with sorted keys and a trailing newline.
    pub fn to_json(&self) -> String {
        let v = serde_json::to_value(self).expect("ledger serializes");
        let sorted: Value =
            serde_json::from_str(&canonical_json(&v)).expect("canonical JSON parses");
        let mut s = serde_json::to_string_pretty(&sorted).expect("value serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        serde_json::from_str(text).map_err(|e| PipelineError::Ledger(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), PipelineError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| PipelineError::io(path, e))
    }

    pub fn record(&self, mwe: &str) -> Option<&MweRecord> {
        self.candidates.iter().find(|r| r.candidate.mwe == mwe)
    }

    /// Every exchange in the ledger as a replay transcript, one entry per
    /// distinct prompt, sorted by prompt.
    pub fn transcript_entries(&self) -> Vec<TranscriptEntry> {
        let mut by_prompt = std::collections::BTreeMap::new();
        let turns = self
            .mwe_generation
            .iter()
            .chain(self.candidates.iter().flat_map(|r| r.transcript.iter()));
        for t in turns {
            by_prompt
                .entry(t.prompt.clone())
                .or_insert_with(|| TranscriptEntry {
                    prompt_sha256: prompt_digest(&t.prompt),
                    prompt: t.prompt.clone(),
                    response: t.response.clone(),
                    params: self.config.model.clone(),
                });
        }
        by_prompt.into_values().collect()
    }
}
