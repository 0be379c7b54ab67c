//! Semantic templates and generation-oriented meaning representations.
//!
//! A template is the seed verb's concept with the concepts constraining its
//! case roles, e.g. `HIRE(AGENT: MANAGERIAL-ROLE, THEME: HUMAN)`. GMRs fill
//! the AGENT and THEME roles with noun senses whose concept satisfies the
//! constraint.

use std::collections::BTreeMap;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexicon::{LexSense, Lexicon, Pos};
use crate::ontology::{CaseRole, ConceptName, Ontology, OntologyError};

pub const DEFAULT_GMR_CAP: usize = 5;

/// Roles filled in generated GMRs: subject and direct object.
pub const GMR_ROLES: [CaseRole; 2] = [CaseRole::Agent, CaseRole::Theme];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemanticTemplate {
    pub seed_sense_id: String,
    pub concept: ConceptName,
    pub role_constraints: BTreeMap<CaseRole, ConceptName>,
}

impl fmt::Display for SemanticTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let roles: Vec<String> = self
            .role_constraints
            .iter()
            .map(|(r, c)| format!("{r}: {c}"))
            .collect();
        write!(f, "{}({})", self.concept, roles.join(", "))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gmr {
    pub verb_sense: String,
    pub fillers: BTreeMap<CaseRole, String>,
}

impl fmt::Display for Gmr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let args: Vec<&str> = self.fillers.values().map(String::as_str).collect();
        write!(f, "{}({})", self.verb_sense, args.join(", "))
    }
}

#[derive(Debug, Error)]
pub enum GmrError {
    #[error("seed {0} is not a verb sense")]
    NotVerb(String),
    #[error("seed {seed}: no constraint for {role}: {source}")]
    Unresolvable {
        seed: String,
        role: CaseRole,
        #[source]
        source: OntologyError,
    },
    #[error("GMR cap must be at least 1")]
    ZeroCap,
}

pub fn build_template(seed: &LexSense, ont: &Ontology) -> Result<SemanticTemplate, GmrError> {
    if seed.pos != Pos::Verb {
        return Err(GmrError::NotVerb(seed.sense_id.clone()));
    }
    let concept = &seed.sem_struc.concept;
    let mut roles: Vec<CaseRole> = GMR_ROLES.to_vec();
    roles.extend(
        seed.sem_struc
            .role_bindings
            .keys()
            .filter(|r| !GMR_ROLES.contains(r)),
    );
    let mut role_constraints = BTreeMap::new();
    for role in roles {
        let constraint = match seed.sem_struc.constraints.get(&role) {
            Some(c) if ont.contains(c) => Ok(c.clone()),
            Some(c) => Err(OntologyError::UnknownConcept(c.clone())),
            None => ont.constraint_on(concept, role).cloned(),
        };
        match constraint {
            Ok(c) => {
                role_constraints.insert(role, c);
            }
            Err(source) if GMR_ROLES.contains(&role) => {
                return Err(GmrError::Unresolvable {
                    seed: seed.sense_id.clone(),
                    role,
                    source,
                });
            }
            Err(_) => {}
        }
    }
    Ok(SemanticTemplate {
        seed_sense_id: seed.sense_id.clone(),
        concept: concept.clone(),
        role_constraints,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstantiateOptions {
    pub cap: usize,
    pub rng_seed: u64,
    /// Accept fillers whose concept is a descendant of the constraint.
    pub use_descendants: bool,
    pub include_learned: bool,
}

impl Default for InstantiateOptions {
    fn default() -> Self {
        InstantiateOptions {
            cap: DEFAULT_GMR_CAP,
            rng_seed: 0,
            use_descendants: false,
            include_learned: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleDiagnostic {
    pub role: CaseRole,
    pub constraint: ConceptName,
    pub eligible_fillers: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instantiation {
    pub gmrs: Vec<Gmr>,
    pub diagnostics: Vec<RoleDiagnostic>,
}

impl Instantiation {
    /// Roles that had no eligible filler.
    pub fn empty_roles(&self) -> Vec<CaseRole> {
        self.diagnostics
            .iter()
            .filter(|d| d.eligible_fillers == 0)
            .map(|d| d.role)
            .collect()
    }
}

/// Eligible noun fillers for one role constraint.
pub fn eligible_fillers<'a>(
    constraint: &ConceptName,
    lex: &'a Lexicon,
    ont: &Ontology,
    opts: &InstantiateOptions,
) -> Vec<&'a LexSense> {
    if opts.use_descendants {
        lex.senses()
            .filter(|s| s.pos == Pos::Noun && (opts.include_learned || !s.learned))
            .filter(|s| {
                ont.subsumes(constraint, &s.sem_struc.concept)
                    .unwrap_or(false)
            })
            .collect()
    } else {
        lex.lexemes_denoting_with(constraint, Pos::Noun, opts.include_learned)
    }
}

/// Samples at most `cap` GMRs uniformly without replacement from the cross
/// product of AGENT and THEME fillers. Output follows cross-product order.
pub fn instantiate(
    template: &SemanticTemplate,
    lex: &Lexicon,
    ont: &Ontology,
    opts: &InstantiateOptions,
) -> Result<Instantiation, GmrError> {
    if opts.cap == 0 {
        return Err(GmrError::ZeroCap);
    }
    let mut per_role: Vec<(CaseRole, Vec<&LexSense>)> = Vec::new();
    let mut diagnostics = Vec::new();
    for role in GMR_ROLES {
        let constraint = &template.role_constraints[&role];
        let fillers = eligible_fillers(constraint, lex, ont, opts);
        diagnostics.push(RoleDiagnostic {
            role,
            constraint: constraint.clone(),
            eligible_fillers: fillers.len(),
        });
        per_role.push((role, fillers));
    }
    let total: usize = per_role.iter().map(|(_, f)| f.len()).product();
    if total == 0 {
        return Ok(Instantiation {
            gmrs: Vec::new(),
            diagnostics,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.rng_seed);
    let mut picks = rand::seq::index::sample(&mut rng, total, opts.cap.min(total)).into_vec();
    picks.sort_unstable();
    let gmrs = picks
        .into_iter()
        .map(|mut flat| {
            let mut fillers = BTreeMap::new();
            // mixed radix, last role varies fastest
            for (role, senses) in per_role.iter().rev() {
                fillers.insert(*role, senses[flat % senses.len()].sense_id.clone());
                flat /= senses.len();
            }
            Gmr {
                verb_sense: template.seed_sense_id.clone(),
                fillers,
            }
        })
        .collect();
    Ok(Instantiation { gmrs, diagnostics })
}
