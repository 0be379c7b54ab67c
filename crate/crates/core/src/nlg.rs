//! Fixed-frame realizer: `Article subject verb-PAST article object.`

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gmr::Gmr;
use crate::lexicon::Lexicon;
use crate::morphology::{Morphology, MorphologyError, ParadigmSlot};
use crate::ontology::CaseRole;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RealizationPlan {
    pub subject_np: String,
    pub verb_form: String,
    pub object_np: String,
}

impl RealizationPlan {
    pub fn sentence(&self) -> String {
        let text = format!("{} {} {}.", self.subject_np, self.verb_form, self.object_np);
        capitalize_first(&text)
    }
}

#[derive(Debug, Error)]
pub enum NlgError {
    #[error("unknown sense {0}")]
    UnknownSense(String),
    #[error("GMR {gmr} has no {role} filler")]
    MissingFiller { gmr: String, role: CaseRole },
    #[error("cannot inflect seed verb: {0}")]
    Morphology(#[from] MorphologyError),
}

/// Indefinite article by first letter. Known misses: "hour", "unicorn".
pub fn choose_article(noun_phrase: &str) -> &'static str {
    match noun_phrase
        .trim_start()
        .chars()
        .next()
        .map(|c| c.to_ascii_lowercase())
    {
        Some('a' | 'e' | 'i' | 'o' | 'u') => "an",
        _ => "a",
    }
}

fn capitalize_first(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn noun_phrase(lemma: &str) -> String {
    format!("{} {}", choose_article(lemma), lemma)
}

pub fn plan(gmr: &Gmr, lex: &Lexicon, morph: &Morphology) -> Result<RealizationPlan, NlgError> {
    let verb = lex
        .get(&gmr.verb_sense)
        .ok_or_else(|| NlgError::UnknownSense(gmr.verb_sense.clone()))?;
    let filler = |role: CaseRole| -> Result<&str, NlgError> {
        let id = gmr
            .fillers
            .get(&role)
            .ok_or_else(|| NlgError::MissingFiller {
                gmr: gmr.to_string(),
                role,
            })?;
        lex.get(id)
            .map(|s| s.lemma.as_str())
            .ok_or_else(|| NlgError::UnknownSense(id.clone()))
    };
    let head = verb
        .syn_struc
        .as_ref()
        .map(|s| s.head.as_str())
        .unwrap_or(&verb.lemma);
    Ok(RealizationPlan {
        subject_np: noun_phrase(filler(CaseRole::Agent)?),
        verb_form: morph.inflect(head, ParadigmSlot::Past)?,
        object_np: noun_phrase(filler(CaseRole::Theme)?),
    })
}

pub fn realize(gmr: &Gmr, lex: &Lexicon, morph: &Morphology) -> Result<String, NlgError> {
    Ok(plan(gmr, lex, morph)?.sentence())
}

/// Realizes each GMR in order, keeping the first occurrence of duplicates.
pub fn realize_all(
    gmrs: &[Gmr],
    lex: &Lexicon,
    morph: &Morphology,
) -> Result<Vec<String>, NlgError> {
    let mut out: Vec<String> = Vec::with_capacity(gmrs.len());
    for g in gmrs {
        let s = realize(g, lex, morph)?;
        if !out.contains(&s) {
            out.push(s);
        }
    }
    Ok(out)
}
