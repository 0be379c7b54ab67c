//! End-to-end learning runs: seed sense in, ledger and extended lexicon out.

mod clone;
mod config;
mod ledger;
mod review;

pub use clone::{clone_sense, CloneError, MAX_LEARNED_EXAMPLES};
pub use config::{BackendConfig, RunConfig, DEFAULT_TIMEOUT_SECS};
pub use ledger::{
    canonical_json, run_id, InputDigests, MweRecord, ReviewEntry, ReviewKind, RunLedger, RunStatus,
    Stage, StageFailure, LEDGER_FILE, LEDGER_FORMAT_VERSION, OUTPUT_LEXICON_FILE,
};
pub use review::{report, review, ReviewAction, VETTED_LEXICON_FILE};

use std::path::{Path, PathBuf};
use std::time::Duration;

use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::chain::{
    bindings, run_step, BackendError, ChainContext, HttpBackend, LlmBackend, PromptSet,
    RecordingBackend, ReplayBackend, RetryPolicy, TemplateError,
};
use crate::corpus::{CorpusError, CorpusIndex};
use crate::filter::{filter_candidates, parse_mwe_list, render_mwe_list, FilterOptions};
use crate::gmr::{build_template, instantiate, InstantiateOptions};
use crate::lexicon::{LexSense, Lexicon, LexiconError, Pos};
use crate::morphology::Morphology;
use crate::nlg::realize_all;
use crate::ontology::{Ontology, OntologyError};
use crate::validator::{
    build_validation_bindings, decide, parse_validated, CandidateMwe, SourcePath,
};

/// Seed sentences appended to the seed sense's examples.
pub const MAX_SEED_EXAMPLES: usize = 3;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("lexicon: {0}")]
    Lexicon(#[from] LexiconError),
    #[error("ontology: {0}")]
    Ontology(#[from] OntologyError),
    #[error("corpus: {0}")]
    Corpus(#[from] CorpusError),
    #[error("templates: {0}")]
    Templates(#[from] TemplateError),
    #[error("backend: {0}")]
    Backend(#[from] BackendError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("ledger: {0}")]
    Ledger(String),
    #[error("sense {0} is not a learned sense of this run")]
    UnknownSense(String),
}

impl PipelineError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        PipelineError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// 2 for bad arguments, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) | PipelineError::UnknownSense(_) => 2,
            _ => 1,
        }
    }
}

fn file_digest(path: &Path) -> Result<String, PipelineError> {
    let bytes = std::fs::read(path).map_err(|e| PipelineError::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Loaded inputs of a run.
pub struct Resources {
    pub lexicon: Lexicon,
    pub ontology: Ontology,
    pub corpus: Option<CorpusIndex>,
    pub prompts: PromptSet,
    pub inputs: InputDigests,
}

impl Resources {
    pub fn load(config: &RunConfig) -> Result<Self, PipelineError> {
        let ontology = Ontology::load(&config.ontology)?;
        let lexicon = Lexicon::load(&config.lexicon)?;
        lexicon.validate_against(&ontology)?;
        let prompts = match &config.templates {
            Some(p) => PromptSet::load(p)?,
            None => PromptSet::builtin(),
        };
        let (corpus, corpus_sha256) = match &config.corpus {
            Some(p) => {
                let index = match &config.corpus_cache {
                    Some(cache) => CorpusIndex::load_or_build(p, cache)?,
                    None => CorpusIndex::build(p)?,
                };
                (Some(index), Some(file_digest(p)?))
            }
            None => (None, None),
        };
        let inputs = InputDigests {
            lexicon_sha256: file_digest(&config.lexicon)?,
            ontology_sha256: file_digest(&config.ontology)?,
            corpus_sha256,
        };
        Ok(Resources {
            lexicon,
            ontology,
            corpus,
            prompts,
            inputs,
        })
    }
}

/// A finished run: its ledger and the extended lexicon copy.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub ledger: RunLedger,
    pub lexicon: Lexicon,
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// True when some case role is bound to the sense's direct-object variable.
fn is_transitive(sense: &LexSense) -> bool {
    sense.pos == Pos::Verb
        && sense.syn_struc.as_ref().is_some_and(|syn| {
            !syn.object_var.is_empty()
                && sense
                    .sem_struc
                    .role_bindings
                    .values()
                    .any(|v| *v == syn.object_var)
        })
}

struct BranchResult {
    record: MweRecord,
    failure: Option<StageFailure>,
}

struct Run<'a> {
    config: &'a RunConfig,
    res: &'a Resources,
    backend: &'a dyn LlmBackend,
    morph: &'a Morphology,
    seed: &'a LexSense,
}

impl Run<'_> {
    /// Candidate gathering and validation for one MWE, on its own copy of
    /// the chain.
    fn branch(
        &self,
        mwe: &str,
        mwe_list: &str,
        seed_sentences: &[String],
        mut ctx: ChainContext,
    ) -> BranchResult {
        let cfg = self.config;
        let prompts = &self.res.prompts;
        let seed_text = seed_sentences.join(" ");
        let mut candidate = CandidateMwe::new(mwe, cfg.path);
        let mut corpus_hits = Vec::new();
        let finish =
            |candidate: CandidateMwe, ctx: ChainContext, hits, unmatched, failure| BranchResult {
                record: MweRecord {
                    candidate,
                    corpus_hits: hits,
                    unmatched_validation: unmatched,
                    transcript: ctx.into_turns(),
                },
                failure,
            };
        let fail = |stage, message: String| {
            Some(StageFailure {
                stage,
                mwe: Some(mwe.to_string()),
                message,
            })
        };

        match cfg.path {
            SourcePath::Llm => {
                let b = bindings([
                    ("seed", self.seed.lemma.clone()),
                    ("text", seed_text.clone()),
                    ("mwe", mwe.to_string()),
                    ("mwe_list", mwe_list.to_string()),
                ]);
                match run_step(
                    self.backend,
                    &mut ctx,
                    &prompts.sentence_generation,
                    &b,
                    &cfg.model,
                ) {
                    Ok(raw) => {
                        let opts = FilterOptions {
                            require_mwe: cfg.require_mwe_in_candidates,
                            gap: cfg.gap,
                        };
                        candidate.candidate_sentences =
                            filter_candidates(&raw, mwe, self.morph, opts);
                    }
                    Err(e) => {
                        let msg = e.to_string();
                        let c = candidate.reject(format!("sentence generation failed: {msg}"));
                        return finish(
                            c,
                            ctx,
                            corpus_hits,
                            Vec::new(),
                            fail(Stage::SentenceGeneration, msg),
                        );
                    }
                }
            }
            SourcePath::Corpus => {
                let index = self.res.corpus.as_ref().expect("corpus path has an index");
                match index.find_sentences(self.morph, mwe, cfg.gap, cfg.hit_limit) {
                    Ok(hits) => {
                        candidate.candidate_sentences =
                            hits.iter().map(|h| h.raw_text.clone()).collect();
                        corpus_hits = hits;
                    }
                    Err(e) => {
                        let msg = e.to_string();
                        let c = candidate.reject(format!("corpus search failed: {msg}"));
                        return finish(
                            c,
                            ctx,
                            corpus_hits,
                            Vec::new(),
                            fail(Stage::CorpusSearch, msg),
                        );
                    }
                }
            }
        }

        let mut b = match build_validation_bindings(
            &self.seed.lemma,
            seed_sentences,
            mwe,
            &candidate.candidate_sentences,
        ) {
            Ok(b) => b,
            Err(e) => {
                let c = candidate.reject(e.to_string());
                return finish(c, ctx, corpus_hits, Vec::new(), None);
            }
        };
        b.insert("mwe_list".into(), mwe_list.to_string());
        match run_step(self.backend, &mut ctx, &prompts.validation, &b, &cfg.model) {
            Ok(raw) => {
                let parsed = parse_validated(&raw, &candidate.candidate_sentences);
                candidate.validated_sentences = parsed.validated;
                finish(decide(candidate), ctx, corpus_hits, parsed.unmatched, None)
            }
            Err(e) => {
                let msg = e.to_string();
                let c = candidate.reject(format!("validation failed: {msg}"));
                finish(
                    c,
                    ctx,
                    corpus_hits,
                    Vec::new(),
                    fail(Stage::Validation, msg),
                )
            }
        }
    }
}

/// Runs the whole pipeline in memory. Run-level stage failures abort the
/// run and are recorded; per-MWE failures reject that MWE only.
pub fn run(
    config: &RunConfig,
    res: &Resources,
    backend: &dyn LlmBackend,
) -> Result<RunOutcome, PipelineError> {
    config.validate()?;
    if config.path == SourcePath::Corpus && res.corpus.is_none() {
        return Err(PipelineError::Config(
            "the corpus path needs a loaded corpus".into(),
        ));
    }
    let seed = res.lexicon.get(&config.seed_sense_id).ok_or_else(|| {
        PipelineError::Config(format!(
            "seed sense {} is not in the lexicon",
            config.seed_sense_id
        ))
    })?;
    if !is_transitive(seed) {
        return Err(PipelineError::Config(format!(
            "seed sense {} is not a transitive verb sense",
            seed.sense_id
        )));
    }
    let started_at = now();
    let run_id = run_id(config, &res.inputs, &res.prompts);
    let mut ledger = RunLedger {
        format_version: LEDGER_FORMAT_VERSION,
        run_id: run_id.clone(),
        config: config.clone(),
        inputs: res.inputs.clone(),
        templates: res.prompts.clone(),
        semantic_template: None,
        gmrs: Vec::new(),
        gmr_diagnostics: Vec::new(),
        seed_sentences: Vec::new(),
        mwe_generation: None,
        mwe_list: Vec::new(),
        mwe_list_notes: Vec::new(),
        candidates: Vec::new(),
        learned_sense_ids: Vec::new(),
        learned_senses: Vec::new(),
        seed_examples_added: Vec::new(),
        notes: Vec::new(),
        failures: Vec::new(),
        status: RunStatus::Completed,
        output_lexicon: OUTPUT_LEXICON_FILE.to_string(),
        started_at: Some(started_at),
        finished_at: None,
        review_log: Vec::new(),
        digest: String::new(),
    };
    let mut out_lex = res.lexicon.clone();
    let finish = |mut ledger: RunLedger, lexicon: Lexicon| {
        ledger.finished_at = Some(now());
        ledger.seal();
        Ok(RunOutcome { ledger, lexicon })
    };
    let abort = |mut ledger: RunLedger, lexicon: Lexicon, stage, message: String| {
        log::error!("{stage:?}: {message}");
        ledger.failures.push(StageFailure {
            stage,
            mwe: None,
            message,
        });
        ledger.status = RunStatus::Aborted;
        finish(ledger, lexicon)
    };

    let template = match build_template(seed, &res.ontology) {
        Ok(t) => t,
        Err(e) => return abort(ledger, out_lex, Stage::SeedTemplate, e.to_string()),
    };
    ledger.semantic_template = Some(template.clone());
    let opts = InstantiateOptions {
        cap: config.gmr_cap,
        rng_seed: config.rng_seed,
        use_descendants: config.use_descendants,
        include_learned: config.include_learned,
    };
    let inst = match instantiate(&template, &res.lexicon, &res.ontology, &opts) {
        Ok(i) => i,
        Err(e) => return abort(ledger, out_lex, Stage::GmrInstantiation, e.to_string()),
    };
    let empty_roles = inst.empty_roles();
    ledger.gmrs = inst.gmrs;
    ledger.gmr_diagnostics = inst.diagnostics;
    if ledger.gmrs.is_empty() {
        let roles: Vec<String> = empty_roles.iter().map(|r| r.to_string()).collect();
        ledger.notes.push(format!(
            "no GMRs: no eligible fillers for {}",
            roles.join(", ")
        ));
        return finish(ledger, out_lex);
    }
    let morph = Morphology::english();
    ledger.seed_sentences = match realize_all(&ledger.gmrs, &res.lexicon, morph) {
        Ok(s) => s,
        Err(e) => return abort(ledger, out_lex, Stage::Realization, e.to_string()),
    };

    let mut ctx = ChainContext::new(&res.prompts.base);
    let b = bindings([
        ("seed", seed.lemma.clone()),
        ("text", ledger.seed_sentences.join(" ")),
    ]);
    let raw = match run_step(
        backend,
        &mut ctx,
        &res.prompts.mwe_generation,
        &b,
        &config.model,
    ) {
        Ok(r) => r,
        Err(e) => return abort(ledger, out_lex, Stage::MweGeneration, e.to_string()),
    };
    ledger.mwe_generation = ctx.turns().last().cloned();
    let list = match parse_mwe_list(&raw) {
        Ok(l) => l,
        Err(e) => return abort(ledger, out_lex, Stage::MweGeneration, e.to_string()),
    };
    ledger.mwe_list = list.mwes;
    ledger.mwe_list_notes = list.notes;
    let mwe_list = render_mwe_list(&ledger.mwe_list);

    let runner = Run {
        config,
        res,
        backend,
        morph,
        seed,
    };
    let results: Vec<BranchResult> = ledger
        .mwe_list
        .par_iter()
        .map(|mwe| runner.branch(mwe, &mwe_list, &ledger.seed_sentences, ctx.clone()))
        .collect();
    for r in results {
        ledger.failures.extend(r.failure);
        ledger.candidates.push(r.record);
    }

    for record in &ledger.candidates {
        let c = &record.candidate;
        if c.verdict != crate::validator::Verdict::Accepted {
            continue;
        }
        if let Some(existing) = out_lex
            .senses_of(&c.mwe)
            .into_iter()
            .find(|s| s.sem_struc.concept == seed.sem_struc.concept)
        {
            ledger.notes.push(format!(
                "{:?} already has sense {} for {}; not cloned",
                c.mwe, existing.sense_id, seed.sem_struc.concept
            ));
            continue;
        }
        let cloned = clone_sense(seed, &c.mwe, &c.validated_sentences, &run_id, &out_lex)
            .map_err(|e| e.to_string())
            .and_then(|s| {
                out_lex
                    .add_sense(s.clone())
                    .map(|_| s)
                    .map_err(|e| e.to_string())
            });
        match cloned {
            Ok(s) => {
                ledger.learned_sense_ids.push(s.sense_id.clone());
                ledger.learned_senses.push(s);
            }
            Err(message) => ledger.failures.push(StageFailure {
                stage: Stage::Cloning,
                mwe: Some(c.mwe.clone()),
                message,
            }),
        }
    }

    let added: Vec<String> = ledger
        .seed_sentences
        .iter()
        .filter(|s| !seed.examples.contains(s))
        .take(MAX_SEED_EXAMPLES)
        .cloned()
        .collect();
    if !added.is_empty() {
        let extra = added.clone();
        match out_lex.update_sense(&seed.sense_id, |s| s.examples.extend(extra)) {
            Ok(()) => ledger.seed_examples_added = added,
            Err(e) => ledger.failures.push(StageFailure {
                stage: Stage::SeedExamples,
                mwe: None,
                message: e.to_string(),
            }),
        }
    }
    finish(ledger, out_lex)
}

pub fn build_backend(config: &BackendConfig) -> Result<Box<dyn LlmBackend>, PipelineError> {
    Ok(match config {
        BackendConfig::Http {
            endpoint,
            timeout_secs,
        } => Box::new(HttpBackend::new(
            endpoint.clone(),
            Duration::from_secs(*timeout_secs),
            RetryPolicy::default(),
        )?),
        BackendConfig::Replay { transcript } => Box::new(ReplayBackend::from_file(transcript)?),
    })
}

fn same_file(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(x), Ok(y)) => x == y,
        _ => false,
    }
}

/// Writes `ledger.json` and the output lexicon into `out_dir`.
pub fn write_outputs(outcome: &RunOutcome, config: &RunConfig) -> Result<PathBuf, PipelineError> {
    let dir = &config.out_dir;
    std::fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
    let lex_path = dir.join(&outcome.ledger.output_lexicon);
    if same_file(&lex_path, &config.lexicon) {
        return Err(PipelineError::Config(format!(
            "output lexicon {} would overwrite the input lexicon",
            lex_path.display()
        )));
    }
    outcome.lexicon.save(&lex_path)?;
    let ledger_path = dir.join(LEDGER_FILE);
    outcome.ledger.save(&ledger_path)?;
    Ok(ledger_path)
}

/// Loads resources, runs against `backend`, and writes the outputs.
pub fn learn_with(
    config: &RunConfig,
    backend: &dyn LlmBackend,
) -> Result<RunOutcome, PipelineError> {
    config.validate()?;
    let res = Resources::load(config)?;
    let outcome = run(config, &res, backend)?;
    write_outputs(&outcome, config)?;
    Ok(outcome)
}

pub fn learn(config: &RunConfig) -> Result<RunOutcome, PipelineError> {
    config.validate()?;
    let backend = build_backend(&config.backend)?;
    learn_with(config, backend.as_ref())
}

/// Runs against the HTTP backend and saves every exchange to `transcript`
/// for later replay. The transcript is written even when the run fails.
pub fn record(config: &RunConfig, transcript: &Path) -> Result<RunOutcome, PipelineError> {
    if !matches!(config.backend, BackendConfig::Http { .. }) {
        return Err(PipelineError::Config(
            "recording needs the http backend".into(),
        ));
    }
    config.validate()?;
    let recorder = RecordingBackend::new(build_backend(&config.backend)?);
    let result = learn_with(config, &recorder);
    if let Some(parent) = transcript.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| PipelineError::io(parent, e))?;
    }
    recorder
        .save(transcript)
        .map_err(|e| PipelineError::io(transcript, e))?;
    result
}
