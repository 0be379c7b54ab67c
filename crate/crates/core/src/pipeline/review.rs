use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::ledger::{ReviewEntry, ReviewKind, RunLedger};
use super::PipelineError;
use crate::lexicon::Lexicon;
use crate::validator::Verdict;

pub const VETTED_LEXICON_FILE: &str = "lexicon.vetted.json";

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ReviewAction {
    Report,
    Accept(String),
    Reject(String),
}

/// Human-readable summary of a ledger.
pub fn report(ledger: &RunLedger) -> String {
    let mut out = String::new();
    let cfg = &ledger.config;
    let _ = writeln!(
        out,
        "{} seed={} path={:?} status={:?}",
        ledger.run_id, cfg.seed_sense_id, cfg.path, ledger.status
    );
    if let Some(t) = &ledger.semantic_template {
        let _ = writeln!(out, "template: {t}");
    }
    for g in &ledger.gmrs {
        let _ = writeln!(out, "gmr: {g}");
    }
    for s in &ledger.seed_sentences {
        let _ = writeln!(out, "seed sentence: {s}");
    }
    let _ = writeln!(out, "mwes: [{}]", ledger.mwe_list.join(", "));
    for r in &ledger.candidates {
        let c = &r.candidate;
        let _ = write!(out, "\n{} ({:?}): {:?}", c.mwe, c.source_path, c.verdict);
        if let Some(reason) = &c.reason {
            let _ = write!(out, " - {reason}");
        }
        let _ = writeln!(out, "\n  candidates: {}", c.candidate_sentences.len());
        if c.verdict == Verdict::Accepted {
            for s in &c.validated_sentences {
                let _ = writeln!(out, "  + {s}");
            }
        }
    }
    let _ = writeln!(out);
    if ledger.learned_senses.is_empty() {
        let _ = writeln!(out, "learned senses: none");
    }
    for s in &ledger.learned_senses {
        let decision = ledger
            .review_log
            .iter()
            .rev()
            .find(|e| e.sense_id == s.sense_id)
            .map(|e| format!("{:?}", e.action).to_lowercase())
            .unwrap_or_else(|| "pending".into());
        let _ = writeln!(
            out,
            "learned {} \"{}\" -> {} [{decision}]",
            s.sense_id, s.lemma, s.sem_struc.concept
        );
        for e in &s.examples {
            let _ = writeln!(out, "  evidence: {e}");
        }
    }
    for f in &ledger.failures {
        let _ = writeln!(
            out,
            "failure {:?}{}: {}",
            f.stage,
            f.mwe
                .as_deref()
                .map(|m| format!(" ({m})"))
                .unwrap_or_default(),
            f.message
        );
    }
    for n in &ledger.notes {
        let _ = writeln!(out, "note: {n}");
    }
    out
}

fn ledger_dir(ledger_path: &Path) -> PathBuf {
    ledger_path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."))
}

/// Prints nothing itself; returns the report or a one-line decision
/// summary. Decisions go into a vetted lexicon that starts from the run's
/// output lexicon (or the previous vetted file) and are logged in the ledger.
pub fn review(
    ledger_path: &Path,
    action: &ReviewAction,
    out: Option<&Path>,
) -> Result<String, PipelineError> {
    let mut ledger = RunLedger::load(ledger_path)?;
    let (kind, id) = match action {
        ReviewAction::Report => return Ok(report(&ledger)),
        ReviewAction::Accept(id) => (ReviewKind::Accept, id),
        ReviewAction::Reject(id) => (ReviewKind::Reject, id),
    };
    if !ledger.learned_sense_ids.contains(id) {
        return Err(PipelineError::UnknownSense(id.clone()));
    }
    let dir = ledger_dir(ledger_path);
    let vetted = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| dir.join(VETTED_LEXICON_FILE));
    let mut lex = if vetted.exists() {
        Lexicon::load(&vetted)?
    } else {
        Lexicon::load(dir.join(&ledger.output_lexicon))?
    };
    if !lex.contains(id) {
        return Err(PipelineError::UnknownSense(id.clone()));
    }
    match kind {
        ReviewKind::Accept => lex.update_sense(id, |s| s.learned = false)?,
        ReviewKind::Reject => {
            lex.remove_sense(id)?;
        }
    }
    lex.save(&vetted)?;
    ledger.review_log.push(ReviewEntry {
        action: kind,
        sense_id: id.clone(),
        vetted_lexicon: vetted.display().to_string(),
        at: super::now(),
    });
    ledger.save(ledger_path)?;
    Ok(format!(
        "{} {id}; vetted lexicon written to {}",
        match kind {
            ReviewKind::Accept => "accepted",
            ReviewKind::Reject => "rejected",
        },
        vetted.display()
    ))
}
