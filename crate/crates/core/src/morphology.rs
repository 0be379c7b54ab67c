//! English verb paradigms and MWE surface variants.
//!
//! Regular forms come from spelling rules; an irregular table (shipped as
//! `data/irregular_verbs.tsv`) overrides them. Table lines are
//! `lemma<TAB>past<TAB>past_participle[<TAB>gerund[<TAB>third]]`; `#` starts a
//! comment line.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const BUILTIN_TABLE: &str = include_str!("../data/irregular_verbs.tsv");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParadigmSlot {
    Base,
    ThirdSingular,
    Gerund,
    Past,
    PastParticiple,
}

impl ParadigmSlot {
    pub const ALL: [ParadigmSlot; 5] = [
        ParadigmSlot::Base,
        ParadigmSlot::ThirdSingular,
        ParadigmSlot::Gerund,
        ParadigmSlot::Past,
        ParadigmSlot::PastParticiple,
    ];

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for ParadigmSlot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ParadigmSlot::Base => "base",
            ParadigmSlot::ThirdSingular => "third_singular",
            ParadigmSlot::Gerund => "gerund",
            ParadigmSlot::Past => "past",
            ParadigmSlot::PastParticiple => "past_participle",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerbParadigm {
    pub lemma: String,
    forms: [String; 5],
}

impl VerbParadigm {
    pub fn get(&self, slot: ParadigmSlot) -> &str {
        &self.forms[slot.index()]
    }

    pub fn forms(&self) -> impl Iterator<Item = (ParadigmSlot, &str)> {
        ParadigmSlot::ALL.into_iter().map(move |s| (s, self.get(s)))
    }

    /// Forms in slot order with repeats removed.
    pub fn distinct_forms(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::with_capacity(5);
        for f in &self.forms {
            if !out.contains(&f.as_str()) {
                out.push(f);
            }
        }
        out
    }

    pub fn contains(&self, form: &str) -> bool {
        self.forms.iter().any(|f| f == form)
    }
}

/// One surface realization of an MWE: inflected head followed by the
/// remaining tokens unchanged.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MweVariant {
    pub tokens: Vec<String>,
}

impl MweVariant {
    pub fn head(&self) -> &str {
        &self.tokens[0]
    }

    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }
}

#[derive(Debug, Error)]
pub enum MorphologyError {
    #[error("empty lemma")]
    EmptyLemma,
    #[error("lemma {0:?} must be lowercase letters with optional internal hyphens")]
    InvalidLemma(String),
    #[error("{0:?} is not a multiword expression")]
    NotMultiword(String),
    #[error("irregular table line {line}: {reason}")]
    Table { line: usize, reason: String },
    #[error("cannot read irregular table {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Clone, Debug)]
struct IrregularEntry {
    past: String,
    past_participle: String,
    gerund: Option<String>,
    third: Option<String>,
}

/// Rule engine plus irregular-verb table.
#[derive(Clone, Debug)]
pub struct Morphology {
    irregulars: HashMap<String, IrregularEntry>,
}

impl Morphology {
    /// Shared instance backed by the built-in table.
    pub fn english() -> &'static Morphology {
        static ENGLISH: OnceLock<Morphology> = OnceLock::new();
        ENGLISH
            .get_or_init(|| Morphology::from_table(BUILTIN_TABLE).expect("built-in table parses"))
    }

    pub fn from_table(text: &str) -> Result<Self, MorphologyError> {
        let mut irregulars = HashMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim_end();
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
            if !(3..=5).contains(&cols.len()) || cols.iter().any(|c| c.is_empty()) {
                return Err(MorphologyError::Table {
                    line: n + 1,
                    reason: format!(
                        "expected 3 to 5 non-empty tab-separated columns, got {line:?}"
                    ),
                });
            }
            let entry = IrregularEntry {
                past: cols[1].to_string(),
                past_participle: cols[2].to_string(),
                gerund: cols.get(3).map(|s| s.to_string()),
                third: cols.get(4).map(|s| s.to_string()),
            };
            if irregulars.insert(cols[0].to_string(), entry).is_some() {
                return Err(MorphologyError::Table {
                    line: n + 1,
                    reason: format!("duplicate lemma {}", cols[0]),
                });
            }
        }
        Ok(Morphology { irregulars })
    }

    pub fn from_table_file(path: impl AsRef<Path>) -> Result<Self, MorphologyError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| MorphologyError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_table(&text)
    }

    pub fn irregular_count(&self) -> usize {
        self.irregulars.len()
    }

    pub fn verb_forms(&self, lemma: &str) -> Result<VerbParadigm, MorphologyError> {
        check_lemma(lemma)?;
        let irregular = self.irregulars.get(lemma);
        let third = irregular
            .and_then(|e| e.third.clone())
            .unwrap_or_else(|| third_singular(lemma));
        let gerund = irregular
            .and_then(|e| e.gerund.clone())
            .unwrap_or_else(|| gerund(lemma));
        let (past, past_participle) = match irregular {
            Some(e) => (e.past.clone(), e.past_participle.clone()),
            None => {
                let p = regular_past(lemma);
                (p.clone(), p)
            }
        };
        Ok(VerbParadigm {
            lemma: lemma.to_string(),
            forms: [lemma.to_string(), third, gerund, past, past_participle],
        })
    }

    pub fn inflect(&self, lemma: &str, slot: ParadigmSlot) -> Result<String, MorphologyError> {
        Ok(self.verb_forms(lemma)?.get(slot).to_string())
    }

    /// One variant per distinct head form, in paradigm slot order. The first
    /// whitespace token is the head verb.
    pub fn mwe_variants(&self, mwe: &str) -> Result<Vec<MweVariant>, MorphologyError> {
        let tokens: Vec<&str> = mwe.split_whitespace().collect();
        if tokens.len() < 2 {
            return Err(MorphologyError::NotMultiword(mwe.to_string()));
        }
        let head = tokens[0].to_lowercase();
        let paradigm = self.verb_forms(&head)?;
        Ok(paradigm
            .distinct_forms()
            .into_iter()
            .map(|form| MweVariant {
                tokens: std::iter::once(form.to_string())
                    .chain(tokens[1..].iter().map(|t| t.to_string()))
                    .collect(),
            })
            .collect())
    }
}

fn check_lemma(lemma: &str) -> Result<(), MorphologyError> {
    if lemma.is_empty() {
        return Err(MorphologyError::EmptyLemma);
    }
    let ok = lemma
        .split('-')
        .all(|part| !part.is_empty() && part.chars().all(|c| c.is_ascii_lowercase()));
    if !ok {
        return Err(MorphologyError::InvalidLemma(lemma.to_string()));
    }
    Ok(())
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u')
}

fn ends_with_consonant_y(w: &str) -> bool {
    let mut rev = w.chars().rev();
    rev.next() == Some('y') && rev.next().is_some_and(|c| !is_vowel(c))
}

/// Last hyphen-separated segment; spelling changes only look at it.
fn last_segment(w: &str) -> &str {
    w.rsplit('-').next().unwrap_or(w)
}

/// Monosyllabic consonant-vowel-consonant ending (stop, plan, squat), final
/// consonant not w/x/y. `u` after `q` counts as a consonant.
fn doubles_final_consonant(w: &str) -> bool {
    let seg: Vec<char> = last_segment(w).chars().collect();
    let n = seg.len();
    if n < 3 {
        return false;
    }
    let vowel_at = |i: usize| is_vowel(seg[i]) && !(seg[i] == 'u' && i > 0 && seg[i - 1] == 'q');
    let last = seg[n - 1];
    if vowel_at(n - 1) || matches!(last, 'w' | 'x' | 'y') {
        return false;
    }
    if !vowel_at(n - 2) || vowel_at(n - 3) {
        return false;
    }
    let mut groups = 0;
    let mut in_group = false;
    for i in 0..n {
        let v = vowel_at(i);
        if v && !in_group {
            groups += 1;
        }
        in_group = v;
    }
    groups == 1
}

fn third_singular(w: &str) -> String {
    if ends_with_consonant_y(w) {
        return format!("{}ies", &w[..w.len() - 1]);
    }
    let sibilant = ["s", "x", "z", "ch", "sh"].iter().any(|e| w.ends_with(e));
    let consonant_o = w.ends_with('o') && w.chars().rev().nth(1).is_some_and(|c| !is_vowel(c));
    if sibilant || consonant_o {
        format!("{w}es")
    } else {
        format!("{w}s")
    }
}

fn gerund(w: &str) -> String {
    if let Some(stem) = w.strip_suffix("ie") {
        return format!("{stem}ying");
    }
    if ["ee", "oe", "ye"].iter().any(|e| w.ends_with(e)) {
        return format!("{w}ing");
    }
    if w.ends_with('e') && w.len() > 2 {
        return format!("{}ing", &w[..w.len() - 1]);
    }
    if doubles_final_consonant(w) {
        let last = w.chars().last().unwrap();
        return format!("{w}{last}ing");
    }
    format!("{w}ing")
}

fn regular_past(w: &str) -> String {
    if w.ends_with('e') {
        return format!("{w}d");
    }
    if ends_with_consonant_y(w) {
        return format!("{}ied", &w[..w.len() - 1]);
    }
    if doubles_final_consonant(w) {
        let last = w.chars().last().unwrap();
        return format!("{w}{last}ed");
    }
    format!("{w}ed")
}
