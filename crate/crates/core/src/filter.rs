//! Cleaning of raw LLM responses.
//!
//! Sentence lists come back separated by `||`. Text before the first
//! delimiter is conversational filler ("Here are some sentences...") and is
//! marked undelimited.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{contains_mwe, variant_token_lists, DEFAULT_GAP};
use crate::morphology::Morphology;

pub const DELIMITER: &str = "||";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub text: String,
    /// True for a leading segment that was not preceded by the delimiter.
    pub undelimited: bool,
}

pub fn segment(raw: &str) -> Vec<Segment> {
    let leading_delimited = raw.trim_start().starts_with(DELIMITER);
    raw.split(DELIMITER)
        .enumerate()
        .filter_map(|(i, piece)| {
            let text = piece.trim();
            (!text.is_empty()).then(|| Segment {
                text: text.to_string(),
                undelimited: i == 0 && !leading_delimited,
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterOptions {
    /// Also drop segments that do not contain a surface variant of the MWE.
    pub require_mwe: bool,
    pub gap: usize,
}

impl Default for FilterOptions {
    fn default() -> Self {
        FilterOptions {
            require_mwe: true,
            gap: DEFAULT_GAP,
        }
    }
}

/// Delimited segments of `raw`, optionally restricted to those attesting
/// `mwe`. Order is preserved.
pub fn filter_candidates(
    raw: &str,
    mwe: &str,
    morph: &Morphology,
    opts: FilterOptions,
) -> Vec<String> {
    let variants = if opts.require_mwe {
        match variant_token_lists(morph, mwe) {
            Ok(v) => Some(v),
            Err(e) => {
                log::warn!("cannot inflect {mwe:?} for filtering: {e}");
                return Vec::new();
            }
        }
    } else {
        None
    };
    segment(raw)
        .into_iter()
        .filter(|s| !s.undelimited)
        .filter(|s| {
            variants
                .as_ref()
                .is_none_or(|v| contains_mwe(&s.text, v, opts.gap))
        })
        .map(|s| s.text)
        .collect()
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("no bracketed list in response")]
    NoList,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MweList {
    pub mwes: Vec<String>,
    /// Items dropped during parsing, with the reason.
    pub notes: Vec<String>,
}

/// Extracts the first `[a, b, c]` list from a response. Items are trimmed,
/// lowercased and deduplicated; single-token items are dropped.
pub fn parse_mwe_list(raw: &str) -> Result<MweList, ParseError> {
    let open = raw.find('[').ok_or(ParseError::NoList)?;
    let close = raw[open..].find(']').ok_or(ParseError::NoList)? + open;
    let mut out = MweList::default();
    for item in raw[open + 1..close].split(',') {
        let item = item
            .trim_matches(|c: char| {
                c.is_whitespace() || matches!(c, '"' | '\'' | '‘' | '’' | '“' | '”')
            })
            .split_whitespace()
            .collect::<Vec<_>>()
            .join(" ")
            .to_lowercase();
        if item.is_empty() {
            continue;
        }
        if !item.contains(' ') {
            out.notes
                .push(format!("dropped single-token item {item:?}"));
            continue;
        }
        if out.mwes.contains(&item) {
            out.notes.push(format!("dropped duplicate {item:?}"));
            continue;
        }
        out.mwes.push(item);
    }
    Ok(out)
}

pub fn render_mwe_list(mwes: &[String]) -> String {
    format!("[{}]", mwes.join(", "))
}
