#![allow(dead_code)]

use std::path::{Path, PathBuf};

use lexiforge::chain::{prompt_digest, BackendError, LlmBackend, ModelParams};
use lexiforge::pipeline::{BackendConfig, RunConfig};
use lexiforge::validator::SourcePath;

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

/// A worked example: seed sense, the rng seed that makes a one-GMR run pick
/// the example's seed sentence, and its transcript file.
#[derive(Clone, Copy, Debug)]
pub struct Example {
    pub seed: &'static str,
    pub rng_seed: u64,
    pub transcript: &'static str,
    pub paths: &'static [SourcePath],
}

pub const MEASURE: Example = Example {
    seed: "measure-v1",
    rng_seed: 2,
    transcript: "take_stock.json",
    paths: &[SourcePath::Llm],
};

pub const GUESS: Example = Example {
    seed: "guess-v1",
    rng_seed: 0,
    transcript: "guess.json",
    paths: &[SourcePath::Llm, SourcePath::Corpus],
};

pub const EMPLOY: Example = Example {
    seed: "employ-v3",
    rng_seed: 2,
    transcript: "employ.json",
    paths: &[SourcePath::Llm, SourcePath::Corpus],
};

pub const EXAMPLES: [Example; 3] = [MEASURE, GUESS, EMPLOY];

pub fn example_config(ex: &Example, path: SourcePath, out_dir: &Path) -> RunConfig {
    let mut cfg = RunConfig::new(
        ex.seed,
        path,
        fixture("lexicon.json"),
        fixture("ontology.json"),
        BackendConfig::Replay {
            transcript: fixture(ex.transcript),
        },
        out_dir,
    );
    cfg.gmr_cap = 1;
    cfg.rng_seed = ex.rng_seed;
    if path == SourcePath::Corpus {
        cfg.corpus = Some(fixture("corpus.txt"));
    }
    cfg
}

pub const TAKE_STOCK_RAW: &str = "I apologize for the confusion. Here are several example sentences illustrating the use of the phrasal verb ‘take stock’: || Let’s take stock of our inventory before placing the order. || After a long day at work, I like to take stock of my accomplishments||";

pub const TAKE_A_SHOT_CANDIDATES: [&str; 3] = [
    "The detective took a shot at who might be the main suspect based on the available clues.",
    "She took a shot at persuading her parents to let her go on the trip with her friends.",
    "Despite having no experience in cooking, he took a shot at preparing a gourmet meal for his guests.",
];

pub const BRING_IN_CANDIDATES: [&str; 4] = [
    "The zoo plans to bring in a pair of rare pandas to attract more visitors.",
    "The school decided to bring in a motivational speaker to inspire the students.",
    "The government is looking to bring in stricter regulations to protect the environment.",
    "A leader brought in a new employee.",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Step {
    MweGeneration,
    SentenceGeneration,
    Validation { after_generation: bool },
}

fn field<'a>(block: &'a str, label: &str) -> Option<&'a str> {
    block
        .lines()
        .find_map(|l| l.strip_prefix(label))
        .map(str::trim)
}

/// Canned model answers for the worked examples, keyed on the seed word,
/// the chain step and the MWE.
pub struct ScriptedBackend;

impl ScriptedBackend {
    fn answer(word: &str, step: Step, mwe: &str) -> Option<String> {
        let s = |v: &str| Some(v.to_string());
        let delimited = |v: &[&str]| Some(format!("|| {} ||", v.join(" || ")));
        match (word, step, mwe) {
            ("measure", Step::MweGeneration, _) => s("[take stock]"),
            ("measure", Step::SentenceGeneration, "take stock") => s(TAKE_STOCK_RAW),
            ("measure", Step::Validation { .. }, "take stock") => s(
                "Let’s take stock of our inventory before placing the order. || After a long day at work, I like to take stock of my accomplishments",
            ),

            ("guess", Step::MweGeneration, _) => s("[figure out, take a shot, take a stab, work out]"),
            ("guess", Step::SentenceGeneration, "figure out") => delimited(&[
                "The detective figured out who the main suspect was.",
                "She finally figured out the answer to the riddle.",
                "Can you figure out how much the repairs will cost?",
            ]),
            ("guess", Step::SentenceGeneration, "take a shot") => Some(format!(
                "Sure! Here are some example sentences: || {} ||",
                TAKE_A_SHOT_CANDIDATES.join(" || ")
            )),
            ("guess", Step::SentenceGeneration, "take a stab") => delimited(&[
                "He took a stab at the total before the waiter brought the bill.",
                "She took a stab at fixing the leaking faucet herself.",
            ]),
            ("guess", Step::SentenceGeneration, "work out") => delimited(&[
                "The students worked out the answer without a calculator.",
                "He works out at the gym every morning.",
            ]),
            ("guess", Step::Validation { after_generation: true }, "figure out") => {
                s("Can you figure out how much the repairs will cost?")
            }
            ("guess", Step::Validation { after_generation: true }, "take a shot") => {
                s("The detective took a shot at who\nmight be the main suspect based on the\navailable clues.")
            }
            ("guess", Step::Validation { after_generation: true }, "take a stab") => {
                s("He took a stab at the total before the waiter brought the bill.")
            }
            ("guess", Step::Validation { after_generation: true }, "work out") => {
                s("The students worked out the answer without a calculator.")
            }
            ("guess", Step::Validation { after_generation: false }, "take a shot") => s("So I took a shot, got lucky."),

            ("employ", Step::MweGeneration, _) => s("[bring in, hire on, take on]"),
            ("employ", Step::SentenceGeneration, "bring in") => delimited(&BRING_IN_CANDIDATES),
            ("employ", Step::SentenceGeneration, "hire on") => delimited(&[
                "The ranch hired on three extra hands for the harvest.",
                "She was hired on as a junior analyst.",
            ]),
            ("employ", Step::SentenceGeneration, "take on") => delimited(&[
                "The bakery took on two apprentices this summer.",
                "He took on more work than he could handle.",
            ]),
            ("employ", Step::Validation { after_generation: true }, "bring in") => s(
                "The school decided to bring in a motivational speaker to inspire the students.||A leader brought in a new employee",
            ),
            ("employ", Step::Validation { after_generation: true }, "hire on") => {
                s("The ranch hired on three extra hands for the harvest.")
            }
            ("employ", Step::Validation { after_generation: true }, "take on") => {
                s("The bakery took on two apprentices this summer.")
            }
            ("employ", Step::Validation { after_generation: false }, "bring in") => s("Bring in an expert."),
            _ => None,
        }
    }
}

impl LlmBackend for ScriptedBackend {
    fn complete(&self, prompt: &str, _params: &ModelParams) -> Result<String, BackendError> {
        let unknown = || BackendError::Unrecorded {
            digest: prompt_digest(prompt),
        };
        let blocks: Vec<&str> = prompt
            .split("\n\nPROMPT:\n")
            .skip(1)
            .map(|b| b.split("\n\nRESPONSE:\n").next().unwrap_or(b))
            .collect();
        let (first, last) = (
            blocks.first().ok_or_else(unknown)?,
            blocks.last().ok_or_else(unknown)?,
        );
        let word = field(first, "WORD:").ok_or_else(unknown)?;
        let step = if last.contains("CANDIDATES:") {
            Step::Validation {
                after_generation: blocks.len() == 3,
            }
        } else if last.starts_with("MWE:") {
            Step::SentenceGeneration
        } else {
            Step::MweGeneration
        };
        let mwe = field(last, "MWE:").unwrap_or("");
        Self::answer(word, step, mwe).ok_or_else(unknown)
    }
}
