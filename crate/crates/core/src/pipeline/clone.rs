use thiserror::Error;

use crate::lexicon::{ExtraLexItem, LexSense, Lexicon, Pos, SynStruc};

/// Validated sentences copied into a learned entry.
pub const MAX_LEARNED_EXAMPLES: usize = 5;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CloneError {
    #[error("{0:?} has fewer than two tokens")]
    SingleToken(String),
    #[error("no validated sentences for {0:?}")]
    NoEvidence(String),
    #[error("seed {0} has no syn_struc")]
    SeedWithoutSyntax(String),
}

/// New verb sense for `mwe` carrying the seed's meaning. Tokens after the
/// head become null-sem extras; the sense id is the next free `-vN` id in
/// `lex`.
pub fn clone_sense(
    seed: &LexSense,
    mwe: &str,
    validated: &[String],
    run_id: &str,
    lex: &Lexicon,
) -> Result<LexSense, CloneError> {
    let tokens: Vec<&str> = mwe.split_whitespace().collect();
    if tokens.len() < 2 {
        return Err(CloneError::SingleToken(mwe.to_string()));
    }
    if validated.is_empty() {
        return Err(CloneError::NoEvidence(mwe.to_string()));
    }
    let seed_syn = seed
        .syn_struc
        .as_ref()
        .ok_or_else(|| CloneError::SeedWithoutSyntax(seed.sense_id.clone()))?;
    let lemma = tokens.join(" ");
    Ok(LexSense {
        sense_id: lex.next_verb_sense_id(&lemma),
        lemma,
        pos: Pos::Verb,
        syn_struc: Some(SynStruc {
            head: tokens[0].to_string(),
            subject_var: seed_syn.subject_var.clone(),
            object_var: seed_syn.object_var.clone(),
            extras: tokens[1..]
                .iter()
                .map(|t| ExtraLexItem {
                    surface: t.to_string(),
                    null_sem: true,
                })
                .collect(),
        }),
        sem_struc: seed.sem_struc.clone(),
        examples: validated
            .iter()
            .take(MAX_LEARNED_EXAMPLES)
            .cloned()
            .collect(),
        learned: true,
        provenance: Some(run_id.to_string()),
    })
}
