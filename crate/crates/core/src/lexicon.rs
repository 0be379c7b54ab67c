//! Semantic lexicon: senses bound to ontology concepts.
//!
//! On disk a lexicon is a JSON array of sense records. Saving writes the
//! senses in sense-id order with a fixed key order, so a load/save cycle is
//! byte-stable.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ontology::{CaseRole, ConceptName, Ontology};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pos {
    Verb,
    Noun,
    Other,
}

/// One word or multiword-expression sense.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LexSense {
    pub sense_id: String,
    pub lemma: String,
    pub pos: Pos,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub syn_struc: Option<SynStruc>,
    pub sem_struc: SemStruc,
    #[serde(default)]
    pub examples: Vec<String>,
    #[serde(default)]
    pub learned: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynStruc {
    pub head: String,
    pub subject_var: String,
    pub object_var: String,
    #[serde(default)]
    pub extras: Vec<ExtraLexItem>,
}

/// Lexical material required alongside the head verb, e.g. the particle of a
/// phrasal verb.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtraLexItem {
    pub surface: String,
    pub null_sem: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemStruc {
    pub concept: ConceptName,
    #[serde(default)]
    pub role_bindings: BTreeMap<CaseRole, String>,
    /// Sense-level constraints; these override the concept's ontology slots.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub constraints: BTreeMap<CaseRole, ConceptName>,
}

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("cannot access lexicon {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed lexicon at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("duplicate sense id {0}")]
    Duplicate(String),
    #[error("invalid sense {sense_id}: {reason}")]
    Invalid { sense_id: String, reason: String },
    #[error("unknown sense id {0}")]
    UnknownSense(String),
}

/// Sense store with lemma and concept indices.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Lexicon {
    senses: BTreeMap<String, LexSense>,
    by_lemma: BTreeMap<String, Vec<String>>,
    by_concept: BTreeMap<ConceptName, Vec<String>>,
}

impl Lexicon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LexiconError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| LexiconError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// Parses the record format. Whitespace-only input is an empty lexicon.
    pub fn from_json(text: &str) -> Result<Self, LexiconError> {
        if text.trim().is_empty() {
            return Ok(Self::new());
        }
        let records: Vec<LexSense> =
            serde_json::from_str(text).map_err(|e| LexiconError::Parse {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            })?;
        let mut lex = Self::new();
        for sense in records {
            lex.add_sense(sense)?;
        }
        Ok(lex)
    }

    pub fn to_json(&self) -> String {
        let records: Vec<&LexSense> = self.senses.values().collect();
        let mut out = serde_json::to_string_pretty(&records).expect("lexicon serializes");
        out.push('\n');
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), LexiconError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|source| LexiconError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn len(&self) -> usize {
        self.senses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.senses.is_empty()
    }

    pub fn get(&self, sense_id: &str) -> Option<&LexSense> {
        self.senses.get(sense_id)
    }

    pub fn contains(&self, sense_id: &str) -> bool {
        self.senses.contains_key(sense_id)
    }

    pub fn senses(&self) -> impl Iterator<Item = &LexSense> {
        self.senses.values()
    }

    /// Senses with this lemma, ordered by their numeric sense index.
    pub fn senses_of(&self, lemma: &str) -> Vec<&LexSense> {
        self.by_lemma
            .get(lemma)
            .map(|ids| ids.iter().map(|id| &self.senses[id]).collect())
            .unwrap_or_default()
    }

    /// Unlearned senses of the given part of speech whose concept is exactly
    /// `concept`.
    pub fn lexemes_denoting(&self, concept: &ConceptName, pos: Pos) -> Vec<&LexSense> {
        self.lexemes_denoting_with(concept, pos, false)
    }

    pub fn lexemes_denoting_with(
        &self,
        concept: &ConceptName,
        pos: Pos,
        include_learned: bool,
    ) -> Vec<&LexSense> {
        self.by_concept
            .get(concept)
            .map(|ids| {
                ids.iter()
                    .map(|id| &self.senses[id])
                    .filter(|s| s.pos == pos && (include_learned || !s.learned))
                    .collect()
            })
            .unwrap_or_default()
    }

    pub fn add_sense(&mut self, sense: LexSense) -> Result<(), LexiconError> {
        if self.senses.contains_key(&sense.sense_id) {
            return Err(LexiconError::Duplicate(sense.sense_id));
        }
        check_sense(&sense)?;
        let id = sense.sense_id.clone();
        insert_ordered(self.by_lemma.entry(sense.lemma.clone()).or_default(), &id);
        insert_ordered(
            self.by_concept
                .entry(sense.sem_struc.concept.clone())
                .or_default(),
            &id,
        );
        self.senses.insert(id, sense);
        Ok(())
    }

    pub fn remove_sense(&mut self, sense_id: &str) -> Result<LexSense, LexiconError> {
        let sense = self
            .senses
            .remove(sense_id)
            .ok_or_else(|| LexiconError::UnknownSense(sense_id.to_string()))?;
        remove_from_index(&mut self.by_lemma, &sense.lemma, sense_id);
        remove_from_index(&mut self.by_concept, &sense.sem_struc.concept, sense_id);
        Ok(sense)
    }

    /// Applies `edit` to a sense in place. Lemma and concept changes are
    /// reindexed; the sense id cannot change.
    pub fn update_sense(
        &mut self,
        sense_id: &str,
        edit: impl FnOnce(&mut LexSense),
    ) -> Result<(), LexiconError> {
        let mut sense = self.remove_sense(sense_id)?;
        let original = sense.clone();
        edit(&mut sense);
        if sense.sense_id != sense_id {
            self.add_sense(original)?;
            return Err(LexiconError::Invalid {
                sense_id: sense_id.to_string(),
                reason: "sense id cannot be edited".into(),
            });
        }
        if let Err(e) = check_sense(&sense) {
            self.add_sense(original)?;
            return Err(e);
        }
        self.add_sense(sense)
    }

    /// Next free id `<lemma with underscores>-v<N>` for a verb lemma.
    pub fn next_verb_sense_id(&self, lemma: &str) -> String {
        let stem = lemma.split_whitespace().collect::<Vec<_>>().join("_");
        (1..)
            .map(|n| format!("{stem}-v{n}"))
            .find(|id| !self.senses.contains_key(id))
            .expect("unbounded range")
    }

    /// Checks that every sense concept and constraint exists in `ont`.
    pub fn validate_against(&self, ont: &Ontology) -> Result<(), LexiconError> {
        for s in self.senses.values() {
            let concepts =
                std::iter::once(&s.sem_struc.concept).chain(s.sem_struc.constraints.values());
            for c in concepts {
                if !ont.contains(c) {
                    return Err(LexiconError::Invalid {
                        sense_id: s.sense_id.clone(),
                        reason: format!("concept {c} is not in the ontology"),
                    });
                }
            }
        }
        Ok(())
    }

    #[cfg(test)]
    pub(crate) fn indices_consistent(&self) -> bool {
        let lemma_ok = self.senses.values().all(|s| {
            self.by_lemma
                .get(&s.lemma)
                .is_some_and(|ids| ids.contains(&s.sense_id))
        });
        let concept_ok = self.senses.values().all(|s| {
            self.by_concept
                .get(&s.sem_struc.concept)
                .is_some_and(|ids| ids.contains(&s.sense_id))
        });
        let count: usize = self.by_lemma.values().map(Vec::len).sum();
        let ccount: usize = self.by_concept.values().map(Vec::len).sum();
        lemma_ok && concept_ok && count == self.len() && ccount == self.len()
    }
}

/// Numeric index at the end of a sense id: `employ-v3` → 3, `human-being-1` → 1.
pub fn sense_index(sense_id: &str) -> Option<u32> {
    let tail = sense_id.rsplit('-').next()?;
    let digits = tail.trim_start_matches(|c: char| c.is_ascii_alphabetic());
    digits.parse().ok()
}

fn sense_order_key(id: &str) -> (u32, &str) {
    (sense_index(id).unwrap_or(u32::MAX), id)
}

fn insert_ordered(ids: &mut Vec<String>, id: &str) {
    let key = sense_order_key(id);
    let at = ids.partition_point(|x| sense_order_key(x) < key);
    ids.insert(at, id.to_string());
}

fn remove_from_index<K: Ord + Clone>(index: &mut BTreeMap<K, Vec<String>>, key: &K, id: &str) {
    if let Some(ids) = index.get_mut(key) {
        ids.retain(|x| x != id);
        if ids.is_empty() {
            index.remove(key);
        }
    }
}

fn check_sense(s: &LexSense) -> Result<(), LexiconError> {
    let invalid = |reason: &str| LexiconError::Invalid {
        sense_id: s.sense_id.clone(),
        reason: reason.to_string(),
    };
    if s.sense_id.trim().is_empty() {
        return Err(invalid("empty sense id"));
    }
    if s.lemma.trim().is_empty() {
        return Err(invalid("empty lemma"));
    }
    if s.learned && s.provenance.is_none() {
        return Err(invalid("learned sense without provenance"));
    }
    if s.pos == Pos::Verb {
        let syn = s
            .syn_struc
            .as_ref()
            .ok_or_else(|| invalid("verb sense without syn_struc"))?;
        if syn.head.trim().is_empty() {
            return Err(invalid("verb sense without head"));
        }
        let mut seen = BTreeSet::new();
        for extra in &syn.extras {
            if extra.surface.trim().is_empty() {
                return Err(invalid("empty extra lexical item"));
            }
            if s.learned && !extra.null_sem {
                return Err(invalid("learned extra lexical item must be null-sem"));
            }
            seen.insert(extra.surface.as_str());
        }
        let vars = [syn.subject_var.as_str(), syn.object_var.as_str()];
        for var in s.sem_struc.role_bindings.values() {
            if !vars.contains(&var.as_str()) {
                return Err(invalid(&format!("role binding {var} not in syn_struc")));
            }
        }
    } else if !s.sem_struc.role_bindings.is_empty() && s.syn_struc.is_none() {
        return Err(invalid("role bindings without syn_struc"));
    }
    Ok(())
}
