//! Attested-sentence retrieval over a sentence-per-line corpus.
//!
//! Tokens are lowercased runs of alphanumeric characters; everything else
//! separates tokens and is dropped (the raw line keeps it). An MWE matches a
//! sentence when the tokens of one of its surface variants occur in order with
//! at most `gap` other tokens between consecutive components.

use std::collections::{BTreeSet, HashMap};
use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::morphology::{Morphology, MorphologyError};

/// Lines longer than this many bytes are skipped at index time.
pub const MAX_LINE_BYTES: usize = 8192;
pub const DEFAULT_GAP: usize = 4;
pub const DEFAULT_LIMIT: usize = 10;

const CACHE_MAGIC: &[u8; 6] = b"LXFIDX";
const CACHE_VERSION: u32 = 1;

pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceRecord {
    /// 1-based line number in the corpus file.
    pub id: u32,
    pub raw_text: String,
    pub tokens: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hit {
    pub sentence_id: u32,
    pub raw_text: String,
    pub match_positions: Vec<usize>,
    pub head_form: String,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read corpus {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Morphology(#[from] MorphologyError),
}

/// Positional inverted index. `postings[token]` lists `(sentence slot,
/// position)` pairs in ascending order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusIndex {
    sentences: Vec<SentenceRecord>,
    postings: HashMap<String, Vec<(u32, u32)>>,
}

impl CorpusIndex {
    pub fn build(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        let path = path.as_ref();
        let text = read_corpus(path)?;
        let parts = rayon::current_num_threads().max(1);
        Ok(Self::from_text_partitioned(&text, parts))
    }

    pub fn from_text(text: &str) -> Self {
        Self::from_text_partitioned(text, 1)
    }

    /// Builds per-partition indices in parallel and concatenates them. The
    /// result does not depend on `parts`.
    pub fn from_text_partitioned(text: &str, parts: usize) -> Self {
        let lines: Vec<(u32, &str)> = text
            .lines()
            .enumerate()
            .filter_map(|(i, line)| {
                let line = line.trim();
                if line.is_empty() {
                    return None;
                }
                if line.len() > MAX_LINE_BYTES {
                    log::warn!(
                        "corpus line {} skipped: {} bytes exceeds cap",
                        i + 1,
                        line.len()
                    );
                    return None;
                }
                Some((i as u32 + 1, line))
            })
            .collect();
        let chunk = lines.len().div_ceil(parts.max(1)).max(1);
        let partials: Vec<CorpusIndex> = lines.par_chunks(chunk).map(index_chunk).collect();
        let mut merged = CorpusIndex::default();
        for part in partials {
            let offset = merged.sentences.len() as u32;
            merged.sentences.extend(part.sentences);
            for (token, posts) in part.postings {
                merged
                    .postings
                    .entry(token)
                    .or_default()
                    .extend(posts.into_iter().map(|(s, p)| (s + offset, p)));
            }
        }
        merged
    }

    /// Loads the index from `cache` when its header matches the corpus
    /// digest and format version; otherwise rebuilds and rewrites the cache.
    pub fn load_or_build(
        corpus: impl AsRef<Path>,
        cache: impl AsRef<Path>,
    ) -> Result<Self, CorpusError> {
        let corpus = corpus.as_ref();
        let cache = cache.as_ref();
        let text = read_corpus(corpus)?;
        let digest: [u8; 32] = Sha256::digest(text.as_bytes()).into();
        if let Some(index) = read_cache(cache, &digest) {
            return Ok(index);
        }
        let index = Self::from_text_partitioned(&text, rayon::current_num_threads().max(1));
        if let Err(e) = write_cache(cache, &digest, &index) {
            log::warn!("cannot write index cache {}: {e}", cache.display());
        }
        Ok(index)
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn sentences(&self) -> &[SentenceRecord] {
        &self.sentences
    }

    pub fn postings(&self, token: &str) -> &[(u32, u32)] {
        self.postings.get(token).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Sentences attesting `mwe`, in corpus order, at most `limit`.
    pub fn find_sentences(
        &self,
        morph: &Morphology,
        mwe: &str,
        gap: usize,
        limit: usize,
    ) -> Result<Vec<Hit>, CorpusError> {
        let variants = variant_token_lists(morph, mwe)?;
        let mut candidates = BTreeSet::new();
        for variant in &variants {
            let mut slots: Option<BTreeSet<u32>> = None;
            for token in variant {
                let here: BTreeSet<u32> = self.postings(token).iter().map(|(s, _)| *s).collect();
                slots = Some(match slots {
                    None => here,
                    Some(prev) => prev.intersection(&here).copied().collect(),
                });
            }
            candidates.extend(slots.unwrap_or_default());
        }
        let mut hits = Vec::new();
        for slot in candidates {
            if hits.len() >= limit {
                break;
            }
            let record = &self.sentences[slot as usize];
            if let Some(positions) = first_match(&record.tokens, &variants, gap) {
                hits.push(Hit {
                    sentence_id: record.id,
                    raw_text: record.raw_text.clone(),
                    head_form: record.tokens[positions[0]].clone(),
                    match_positions: positions,
                });
            }
        }
        Ok(hits)
    }
}

fn read_corpus(path: &Path) -> Result<String, CorpusError> {
    std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn index_chunk(lines: &[(u32, &str)]) -> CorpusIndex {
    let mut index = CorpusIndex::default();
    for (slot, (id, line)) in lines.iter().enumerate() {
        let tokens = tokenize(line);
        for (pos, token) in tokens.iter().enumerate() {
            index
                .postings
                .entry(token.clone())
                .or_default()
                .push((slot as u32, pos as u32));
        }
        index.sentences.push(SentenceRecord {
            id: *id,
            raw_text: line.to_string(),
            tokens,
        });
    }
    index
}

fn read_cache(path: &Path, digest: &[u8; 32]) -> Option<CorpusIndex> {
    let mut file = std::fs::File::open(path).ok()?;
    let mut header = [0u8; 6 + 4 + 32];
    file.read_exact(&mut header).ok()?;
    if &header[..6] != CACHE_MAGIC
        || header[6..10] != CACHE_VERSION.to_le_bytes()
        || &header[10..] != digest
    {
        log::info!("index cache {} is stale, rebuilding", path.display());
        return None;
    }
    let mut body = Vec::new();
    file.read_to_end(&mut body).ok()?;
    bincode::deserialize(&body).ok()
}

fn write_cache(path: &Path, digest: &[u8; 32], index: &CorpusIndex) -> std::io::Result<()> {
    let body = bincode::serialize(index).map_err(std::io::Error::other)?;
    let mut file = std::fs::File::create(path)?;
    file.write_all(CACHE_MAGIC)?;
    file.write_all(&CACHE_VERSION.to_le_bytes())?;
    file.write_all(digest)?;
    file.write_all(&body)
}

/// Tokenized surface variants of `mwe`, one per distinct head form.
pub fn variant_token_lists(
    morph: &Morphology,
    mwe: &str,
) -> Result<Vec<Vec<String>>, MorphologyError> {
    Ok(morph
        .mwe_variants(mwe)?
        .iter()
        .map(|v| tokenize(&v.text()))
        .filter(|t| !t.is_empty())
        .collect())
}

/// Lexicographically smallest position tuple at which any variant occurs in
/// `tokens` with at most `gap` intervening tokens between components.
pub fn first_match(tokens: &[String], variants: &[Vec<String>], gap: usize) -> Option<Vec<usize>> {
    for start in 0..tokens.len() {
        let mut best: Option<Vec<usize>> = None;
        for variant in variants {
            if variant.first() != Some(&tokens[start]) {
                continue;
            }
            let mut positions = vec![start];
            if extend_match(tokens, variant, gap, &mut positions)
                && best.as_ref().is_none_or(|b| positions < *b)
            {
                best = Some(positions);
            }
        }
        if best.is_some() {
            return best;
        }
    }
    None
}

/// Depth-first completion trying nearer positions first, so the first full
/// match found is the smallest for this start.
fn extend_match(
    tokens: &[String],
    variant: &[String],
    gap: usize,
    positions: &mut Vec<usize>,
) -> bool {
    let k = positions.len();
    if k == variant.len() {
        return true;
    }
    let prev = positions[k - 1];
    let end = (prev + 1 + gap).min(tokens.len().saturating_sub(1));
    for p in prev + 1..=end {
        if tokens[p] == variant[k] {
            positions.push(p);
            if extend_match(tokens, variant, gap, positions) {
                return true;
            }
            positions.pop();
        }
    }
    false
}

/// True when some variant of the MWE occurs in `text` under the gap rule.
pub fn contains_mwe(text: &str, variants: &[Vec<String>], gap: usize) -> bool {
    first_match(&tokenize(text), variants, gap).is_some()
}
