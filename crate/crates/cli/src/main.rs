use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lexiforge::chain::{
    LlmBackend, ModelParams, RecordingBackend, DEFAULT_ENDPOINT, DEFAULT_MODEL,
};
use lexiforge::corpus::{DEFAULT_GAP, DEFAULT_LIMIT};
use lexiforge::gmr::DEFAULT_GMR_CAP;
use lexiforge::pipeline::{
    build_backend, learn_with, review, BackendConfig, PipelineError, ReviewAction, RunConfig,
    RunOutcome, RunStatus, DEFAULT_TIMEOUT_SECS, LEDGER_FILE,
};
use lexiforge::validator::SourcePath;

#[derive(Parser)]
#[command(
    name = "lexiforge",
    version,
    about = "Learn multiword-expression senses for a seed verb sense"
)]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a learning pass and write a ledger plus an extended lexicon.
    Learn(LearnArgs),
    /// Run against the HTTP backend and save every exchange for replay.
    Record {
        #[command(flatten)]
        run: RunArgs,
        /// Where to write the replay transcript.
        #[arg(long)]
        transcript: PathBuf,
        #[command(flatten)]
        http: HttpArgs,
    },
    /// Show a ledger, or accept/reject one of its learned senses.
    Review {
        ledger: PathBuf,
        #[arg(long, value_name = "ID", conflicts_with = "reject")]
        accept: Option<String>,
        #[arg(long, value_name = "ID")]
        reject: Option<String>,
        /// Vetted lexicon to update (default: lexicon.vetted.json next to the ledger).
        #[arg(long, value_name = "F")]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PathArg {
    Llm,
    Corpus,
    /// Two separate runs, written to <out>/llm and <out>/corpus.
    Both,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BackendArg {
    Http,
    Replay,
}

#[derive(Args)]
struct LearnArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, value_enum)]
    backend: BackendArg,
    #[arg(long, value_name = "F")]
    replay_file: Option<PathBuf>,
    #[command(flatten)]
    http: HttpArgs,
}

#[derive(Args)]
struct HttpArgs {
    #[arg(long, default_value = DEFAULT_ENDPOINT)]
    endpoint: String,
    /// Per-request timeout in seconds.
    #[arg(long, default_value_t = DEFAULT_TIMEOUT_SECS)]
    timeout: u64,
}

#[derive(Args)]
struct RunArgs {
    /// Seed verb sense id, e.g. employ-v3.
    #[arg(long)]
    seed: String,
    #[arg(long, value_enum)]
    path: PathArg,
    #[arg(long, value_name = "F")]
    lexicon: PathBuf,
    #[arg(long, value_name = "F")]
    ontology: PathBuf,
    #[arg(long, value_name = "F")]
    corpus: Option<PathBuf>,
    /// Binary index cache for the corpus; rebuilt when the corpus changes.
    #[arg(long, value_name = "F")]
    index_cache: Option<PathBuf>,
    /// Prompt templates JSON (default: built-in set).
    #[arg(long, value_name = "F")]
    templates: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_GMR_CAP)]
    gmr_cap: usize,
    #[arg(long, default_value_t = 0)]
    rng_seed: u64,
    /// Most tokens allowed between MWE components.
    #[arg(long, default_value_t = DEFAULT_GAP)]
    gap: usize,
    /// Most corpus sentences per MWE.
    #[arg(long, default_value_t = DEFAULT_LIMIT)]
    limit: usize,
    #[arg(long, default_value = DEFAULT_MODEL)]
    model: String,
    #[arg(long, default_value_t = 0.0)]
    temperature: f64,
    #[arg(long, default_value_t = 512)]
    max_tokens: u32,
    /// Also accept fillers whose concept is below the role constraint.
    #[arg(long)]
    use_descendants: bool,
    /// Let learned nouns fill roles.
    #[arg(long)]
    include_learned: bool,
    /// Keep generated sentences that do not contain the MWE.
    #[arg(long)]
    keep_unattested: bool,
}

impl RunArgs {
    /// One config per selected path.
    fn configs(&self, backend: &BackendConfig) -> Result<Vec<RunConfig>, PipelineError> {
        let paths: Vec<(SourcePath, PathBuf)> = match self.path {
            PathArg::Llm => vec![(SourcePath::Llm, self.out.clone())],
            PathArg::Corpus => vec![(SourcePath::Corpus, self.out.clone())],
            PathArg::Both => vec![
                (SourcePath::Llm, self.out.join("llm")),
                (SourcePath::Corpus, self.out.join("corpus")),
            ],
        };
        if self.path == PathArg::Llm && self.corpus.is_some() {
            return Err(PipelineError::Config(
                "--corpus is only used with --path corpus or both".into(),
            ));
        }
        paths
            .into_iter()
            .map(|(path, out_dir)| {
                let mut cfg = RunConfig::new(
                    &self.seed,
                    path,
                    &self.lexicon,
                    &self.ontology,
                    backend.clone(),
                    out_dir,
                );
                cfg.gmr_cap = self.gmr_cap;
                cfg.rng_seed = self.rng_seed;
                cfg.gap = self.gap;
                cfg.hit_limit = self.limit;
                cfg.model = ModelParams {
                    model_name: self.model.clone(),
                    temperature: self.temperature,
                    max_tokens: self.max_tokens,
                };
                cfg.use_descendants = self.use_descendants;
                cfg.include_learned = self.include_learned;
                cfg.require_mwe_in_candidates = !self.keep_unattested;
                cfg.templates = self.templates.clone();
                cfg.corpus_cache = match path {
                    SourcePath::Corpus => self.index_cache.clone(),
                    SourcePath::Llm => None,
                };
                cfg.corpus = match path {
                    SourcePath::Corpus => self.corpus.clone(),
                    SourcePath::Llm => None,
                };
                cfg.validate()?;
                Ok(cfg)
            })
            .collect()
    }
}

fn http_config(http: &HttpArgs) -> BackendConfig {
    BackendConfig::Http {
        endpoint: http.endpoint.clone(),
        timeout_secs: http.timeout,
    }
}

fn summarize(outcome: &RunOutcome, cfg: &RunConfig) {
    let l = &outcome.ledger;
    println!("ledger: {}", cfg.out_dir.join(LEDGER_FILE).display());
    println!("run id: {}", l.run_id);
    println!("digest: {}", l.digest);
    println!("mwes: [{}]", l.mwe_list.join(", "));
    if l.learned_sense_ids.is_empty() {
        println!("learned: none");
    } else {
        println!("learned: {}", l.learned_sense_ids.join(", "));
    }
    for f in &l.failures {
        eprintln!(
            "warning: {:?}{} failed: {}",
            f.stage,
            f.mwe
                .as_deref()
                .map(|m| format!(" ({m})"))
                .unwrap_or_default(),
            f.message
        );
    }
    for n in &l.notes {
        println!("note: {n}");
    }
}

/// Runs every config against one backend. Fails with 1 if a run aborted.
fn run_all(configs: &[RunConfig], backend: &dyn LlmBackend) -> Result<(), PipelineError> {
    let mut aborted = false;
    for cfg in configs {
        let outcome = learn_with(cfg, backend)?;
        summarize(&outcome, cfg);
        aborted |= outcome.ledger.status == RunStatus::Aborted;
    }
    if aborted {
        return Err(PipelineError::Ledger(
            "run aborted; see the failures in the ledger".into(),
        ));
    }
    Ok(())
}

fn learn(args: &LearnArgs) -> Result<(), PipelineError> {
    let backend = match (args.backend, &args.replay_file) {
        (BackendArg::Replay, Some(f)) => BackendConfig::Replay {
            transcript: f.clone(),
        },
        (BackendArg::Replay, None) => {
            return Err(PipelineError::Config(
                "--backend replay needs --replay-file".into(),
            ))
        }
        (BackendArg::Http, Some(_)) => {
            return Err(PipelineError::Config(
                "--replay-file is only used with --backend replay".into(),
            ))
        }
        (BackendArg::Http, None) => http_config(&args.http),
    };
    let configs = args.run.configs(&backend)?;
    let client = build_backend(&backend)?;
    run_all(&configs, client.as_ref())
}

fn record(run: &RunArgs, transcript: &Path, http: &HttpArgs) -> Result<(), PipelineError> {
    let backend = http_config(http);
    let configs = run.configs(&backend)?;
    let recorder = RecordingBackend::new(build_backend(&backend)?);
    let result = run_all(&configs, &recorder);
    if let Some(dir) = transcript.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| PipelineError::Io {
            path: dir.display().to_string(),
            source: e,
        })?;
    }
    recorder.save(transcript).map_err(|e| PipelineError::Io {
        path: transcript.display().to_string(),
        source: e,
    })?;
    println!(
        "transcript: {} ({} exchanges)",
        transcript.display(),
        recorder.entries().len()
    );
    result
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match &cli.command {
        Command::Learn(args) => learn(args),
        Command::Record {
            run,
            transcript,
            http,
        } => record(run, transcript, http),
        Command::Review {
            ledger,
            accept,
            reject,
            out,
        } => {
            let action = match (accept, reject) {
                (Some(id), _) => ReviewAction::Accept(id.clone()),
                (_, Some(id)) => ReviewAction::Reject(id.clone()),
                _ => ReviewAction::Report,
            };
            review(ledger, &action, out.as_deref()).map(|text| print!("{}", ensure_newline(text)))
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn ensure_newline(mut s: String) -> String {
    if !s.ends_with('\n') {
        s.push('\n');
    }
    s
}
