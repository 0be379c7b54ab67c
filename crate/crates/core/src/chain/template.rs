use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const BUILTIN_TEMPLATES: &str = include_str!("../../data/templates.json");

/// Names that may appear as `{name}` in a template body.
pub const PLACEHOLDERS: [&str; 5] = ["seed", "text", "mwe", "mwe_list", "candidates"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateId {
    Base,
    MweGeneration,
    SentenceGeneration,
    Validation,
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TemplateId::Base => "base",
            TemplateId::MweGeneration => "mwe_generation",
            TemplateId::SentenceGeneration => "sentence_generation",
            TemplateId::Validation => "validation",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TemplateError {
    #[error("template {template} uses unknown placeholder {{{name}}}")]
    UnknownPlaceholder { template: TemplateId, name: String },
    #[error("base template must not contain placeholders, found {{{0}}}")]
    BasePlaceholder(String),
    #[error("template {template} needs a binding for {{{name}}}")]
    MissingBinding { template: TemplateId, name: String },
    #[error("binding {0:?} is not a known placeholder")]
    UnknownBinding(String),
    #[error("cannot load templates: {0}")]
    Load(String),
}

pub type Bindings = BTreeMap<String, String>;

/// Builds a binding map from `(placeholder, value)` pairs.
pub fn bindings<'a>(pairs: impl IntoIterator<Item = (&'a str, String)>) -> Bindings {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub template_id: TemplateId,
    pub body: String,
}

enum Piece<'a> {
    Literal(&'a str),
    Slot(&'a str),
}

/// Splits a body into literal text and `{identifier}` slots. Braces that do
/// not enclose a lowercase identifier are literal.
fn pieces(body: &str) -> Vec<Piece<'_>> {
    let mut out = Vec::new();
    let mut rest = body;
    while let Some(open) = rest.find('{') {
        let after = &rest[open + 1..];
        let ident_len = after
            .find(|c: char| !(c.is_ascii_lowercase() || c == '_'))
            .unwrap_or(after.len());
        if ident_len > 0 && after[ident_len..].starts_with('}') {
            out.push(Piece::Literal(&rest[..open]));
            out.push(Piece::Slot(&after[..ident_len]));
            rest = &after[ident_len + 1..];
        } else {
            out.push(Piece::Literal(&rest[..=open]));
            rest = after;
        }
    }
    out.push(Piece::Literal(rest));
    out
}

impl PromptTemplate {
    pub fn new(template_id: TemplateId, body: impl Into<String>) -> Result<Self, TemplateError> {
        let t = PromptTemplate {
            template_id,
            body: body.into(),
        };
        t.check()?;
        Ok(t)
    }

    fn check(&self) -> Result<(), TemplateError> {
        for name in self.placeholders() {
            if self.template_id == TemplateId::Base {
                return Err(TemplateError::BasePlaceholder(name.to_string()));
            }
            if !PLACEHOLDERS.contains(&name) {
                return Err(TemplateError::UnknownPlaceholder {
                    template: self.template_id,
                    name: name.to_string(),
                });
            }
        }
        Ok(())
    }

    pub fn placeholders(&self) -> Vec<&str> {
        let mut names = Vec::new();
        for p in pieces(&self.body) {
            if let Piece::Slot(n) = p {
                if !names.contains(&n) {
                    names.push(n);
                }
            }
        }
        names
    }

    /// Substitutes every placeholder in one pass; bound values are not
    /// rescanned.
    pub fn render(&self, bindings: &Bindings) -> Result<String, TemplateError> {
        if let Some(bad) = bindings
            .keys()
            .find(|k| !PLACEHOLDERS.contains(&k.as_str()))
        {
            return Err(TemplateError::UnknownBinding(bad.clone()));
        }
        let mut out = String::with_capacity(self.body.len());
        for p in pieces(&self.body) {
            match p {
                Piece::Literal(s) => out.push_str(s),
                Piece::Slot(name) => {
                    let value =
                        bindings
                            .get(name)
                            .ok_or_else(|| TemplateError::MissingBinding {
                                template: self.template_id,
                                name: name.to_string(),
                            })?;
                    out.push_str(value);
                }
            }
        }
        Ok(out)
    }
}

/// The base prompt plus the three step templates.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptSet {
    pub base: PromptTemplate,
    pub mwe_generation: PromptTemplate,
    pub sentence_generation: PromptTemplate,
    pub validation: PromptTemplate,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PromptSetFile {
    base: String,
    mwe_generation: String,
    sentence_generation: String,
    validation: String,
}

impl PromptSet {
    pub fn builtin() -> Self {
        Self::from_json(BUILTIN_TEMPLATES).expect("built-in templates are valid")
    }

    /// Parses `{base, mwe_generation, sentence_generation, validation}`.
    pub fn from_json(text: &str) -> Result<Self, TemplateError> {
        let f: PromptSetFile =
            serde_json::from_str(text).map_err(|e| TemplateError::Load(e.to_string()))?;
        Ok(PromptSet {
            base: PromptTemplate::new(TemplateId::Base, f.base)?,
            mwe_generation: PromptTemplate::new(TemplateId::MweGeneration, f.mwe_generation)?,
            sentence_generation: PromptTemplate::new(
                TemplateId::SentenceGeneration,
                f.sentence_generation,
            )?,
            validation: PromptTemplate::new(TemplateId::Validation, f.validation)?,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TemplateError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| TemplateError::Load(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn get(&self, id: TemplateId) -> &PromptTemplate {
        match id {
            TemplateId::Base => &self.base,
            TemplateId::MweGeneration => &self.mwe_generation,
            TemplateId::SentenceGeneration => &self.sentence_generation,
            TemplateId::Validation => &self.validation,
        }
    }
}
