//! Learning multiword-expression senses for a seed verb sense.
//!
//! A run instantiates the seed's semantic template with nouns from the
//! lexicon, realizes the results as sentences, asks a language model for
//! synonymous multiword expressions, gathers example sentences for each one
//! (from the model or from a corpus), has the model confirm which examples
//! keep the seed's meaning, and clones the seed sense for every confirmed
//! expression.

pub mod chain;
pub mod corpus;
pub mod filter;
pub mod gmr;
pub mod lexicon;
pub mod morphology;
pub mod nlg;
pub mod ontology;
pub mod pipeline;
pub mod validator;

pub use chain::{LlmBackend, ModelParams, PromptSet, ReplayBackend};
pub use corpus::CorpusIndex;
pub use lexicon::{LexSense, Lexicon};
pub use morphology::Morphology;
pub use ontology::{CaseRole, ConceptName, Ontology};
pub use pipeline::{learn, review, RunConfig, RunLedger};
