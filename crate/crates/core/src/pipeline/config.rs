use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::chain::{ModelParams, DEFAULT_ENDPOINT};
use crate::corpus::{DEFAULT_GAP, DEFAULT_LIMIT};
use crate::gmr::DEFAULT_GMR_CAP;
use crate::validator::SourcePath;

pub const DEFAULT_TIMEOUT_SECS: u64 = 60;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum BackendConfig {
    Http { endpoint: String, timeout_secs: u64 },
    Replay { transcript: PathBuf },
}

impl BackendConfig {
    pub fn http_default() -> Self {
        BackendConfig::Http {
            endpoint: DEFAULT_ENDPOINT.to_string(),
            timeout_secs: DEFAULT_TIMEOUT_SECS,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed_sense_id: String,
    pub path: SourcePath,
    pub gmr_cap: usize,
    pub rng_seed: u64,
    pub model: ModelParams,
    pub gap: usize,
    pub hit_limit: usize,
    pub use_descendants: bool,
    pub include_learned: bool,
    /// Drop generated sentences that do not contain the MWE.
    pub require_mwe_in_candidates: bool,
    pub lexicon: PathBuf,
    pub ontology: PathBuf,
    pub corpus: Option<PathBuf>,
    /// Binary index cache for the corpus, rebuilt when stale.
    #[serde(default)]
    pub corpus_cache: Option<PathBuf>,
    pub templates: Option<PathBuf>,
    pub backend: BackendConfig,
    pub out_dir: PathBuf,
}

impl RunConfig {
    /// Config with default tuning values.
    pub fn new(
        seed_sense_id: impl Into<String>,
        path: SourcePath,
        lexicon: impl Into<PathBuf>,
        ontology: impl Into<PathBuf>,
        backend: BackendConfig,
        out_dir: impl Into<PathBuf>,
    ) -> Self {
        RunConfig {
            seed_sense_id: seed_sense_id.into(),
            path,
            gmr_cap: DEFAULT_GMR_CAP,
            rng_seed: 0,
            model: ModelParams::default(),
            gap: DEFAULT_GAP,
            hit_limit: DEFAULT_LIMIT,
            use_descendants: false,
            include_learned: false,
            require_mwe_in_candidates: true,
            lexicon: lexicon.into(),
            ontology: ontology.into(),
            corpus: None,
            corpus_cache: None,
            templates: None,
            backend,
            out_dir: out_dir.into(),
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if self.seed_sense_id.trim().is_empty() {
            return bad("seed sense id is empty".into());
        }
        if self.gmr_cap == 0 {
            return bad("gmr cap must be at least 1".into());
        }
        if self.hit_limit == 0 {
            return bad("hit limit must be at least 1".into());
        }
        self.model.validate().map_err(PipelineError::Config)?;
        match (self.path, &self.corpus) {
            (SourcePath::Corpus, None) => return bad("the corpus path needs a corpus file".into()),
            (SourcePath::Llm, Some(_)) => {
                return bad("a corpus file is only used with the corpus path".into())
            }
            _ => {}
        }
        if let BackendConfig::Http {
            endpoint,
            timeout_secs,
        } = &self.backend
        {
            if endpoint.trim().is_empty() {
                return bad("endpoint is empty".into());
            }
            if *timeout_secs == 0 {
                return bad("timeout must be at least 1 second".into());
            }
        }
        Ok(())
    }
}
