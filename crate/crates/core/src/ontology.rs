//! Concept hierarchy with case-role constraints.
//!
//! An ontology file is a JSON array of `{name, parents[], slots{ROLE: CONCEPT}}`
//! records. Parent links must form a DAG with a single root (the one concept
//! without parents); every name mentioned in `parents` or `slots` must be
//! defined in the same file.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Uppercase ontology concept identifier, e.g. `HIRE` or `MANAGERIAL-ROLE`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConceptName(String);

impl ConceptName {
    pub fn new(name: impl Into<String>) -> Self {
        ConceptName(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ConceptName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ConceptName {
    fn from(s: &str) -> Self {
        ConceptName(s.to_string())
    }
}

/// Semantic argument slot of an event concept.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CaseRole {
    Agent,
    Theme,
    Beneficiary,
    Instrument,
    Experiencer,
    Location,
    Source,
    Destination,
}

impl CaseRole {
    pub fn as_str(self) -> &'static str {
        match self {
            CaseRole::Agent => "AGENT",
            CaseRole::Theme => "THEME",
            CaseRole::Beneficiary => "BENEFICIARY",
            CaseRole::Instrument => "INSTRUMENT",
            CaseRole::Experiencer => "EXPERIENCER",
            CaseRole::Location => "LOCATION",
            CaseRole::Source => "SOURCE",
            CaseRole::Destination => "DESTINATION",
        }
    }
}

impl fmt::Display for CaseRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Concept {
    pub name: ConceptName,
    #[serde(default)]
    pub parents: Vec<ConceptName>,
    #[serde(default)]
    pub slots: BTreeMap<CaseRole, ConceptName>,
}

#[derive(Debug, Error)]
pub enum OntologyError {
    #[error("cannot read ontology {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed ontology: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("concept {0} defined twice")]
    Duplicate(ConceptName),
    #[error("concept {from} references undefined concept {missing}")]
    Dangling {
        from: ConceptName,
        missing: ConceptName,
    },
    #[error("parent cycle through {0}")]
    Cycle(ConceptName),
    #[error("ontology has no root concept")]
    NoRoot,
    #[error("ontology has several roots: {0:?}")]
    MultipleRoots(Vec<ConceptName>),
    #[error("unknown concept {0}")]
    UnknownConcept(ConceptName),
    #[error("concept {concept} has no {role} slot")]
    MissingSlot {
        concept: ConceptName,
        role: CaseRole,
    },
}

/// Validated, immutable concept DAG.
#[derive(Clone, Debug)]
pub struct Ontology {
    concepts: BTreeMap<ConceptName, Concept>,
    root: ConceptName,
}

impl Ontology {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, OntologyError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| OntologyError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, OntologyError> {
        let concepts: Vec<Concept> = serde_json::from_str(text)?;
        Self::from_concepts(concepts)
    }

    pub fn from_concepts(list: Vec<Concept>) -> Result<Self, OntologyError> {
        let mut concepts = BTreeMap::new();
        for c in list {
            if concepts.contains_key(&c.name) {
                return Err(OntologyError::Duplicate(c.name));
            }
            concepts.insert(c.name.clone(), c);
        }
        for c in concepts.values() {
            for referenced in c.parents.iter().chain(c.slots.values()) {
                if !concepts.contains_key(referenced) {
                    return Err(OntologyError::Dangling {
                        from: c.name.clone(),
                        missing: referenced.clone(),
                    });
                }
            }
        }
        check_acyclic(&concepts)?;
        let roots: Vec<ConceptName> = concepts
            .values()
            .filter(|c| c.parents.is_empty())
            .map(|c| c.name.clone())
            .collect();
        let root = match roots.len() {
            0 => return Err(OntologyError::NoRoot),
            1 => roots.into_iter().next().unwrap(),
            _ => return Err(OntologyError::MultipleRoots(roots)),
        };
        Ok(Ontology { concepts, root })
    }

    pub fn root(&self) -> &ConceptName {
        &self.root
    }

    pub fn get(&self, name: &ConceptName) -> Option<&Concept> {
        self.concepts.get(name)
    }

    pub fn contains(&self, name: &ConceptName) -> bool {
        self.concepts.contains_key(name)
    }

    pub fn concepts(&self) -> impl Iterator<Item = &Concept> {
        self.concepts.values()
    }

    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    /// True iff `ancestor` equals `descendant` or is reachable from it by
    /// following parent links.
    pub fn subsumes(
        &self,
        ancestor: &ConceptName,
        descendant: &ConceptName,
    ) -> Result<bool, OntologyError> {
        self.require(ancestor)?;
        self.require(descendant)?;
        let mut stack = vec![descendant];
        let mut seen = BTreeSet::new();
        while let Some(cur) = stack.pop() {
            if cur == ancestor {
                return Ok(true);
            }
            if !seen.insert(cur) {
                continue;
            }
            stack.extend(self.concepts[cur].parents.iter());
        }
        Ok(false)
    }

    /// Slot filler constraining `role` on `concept`. Looks at the concept's
    /// own slots only.
    pub fn constraint_on(
        &self,
        concept: &ConceptName,
        role: CaseRole,
    ) -> Result<&ConceptName, OntologyError> {
        let c = self.require(concept)?;
        c.slots
            .get(&role)
            .ok_or_else(|| OntologyError::MissingSlot {
                concept: concept.clone(),
                role,
            })
    }

    fn require(&self, name: &ConceptName) -> Result<&Concept, OntologyError> {
        self.concepts
            .get(name)
            .ok_or_else(|| OntologyError::UnknownConcept(name.clone()))
    }
}

fn check_acyclic(concepts: &BTreeMap<ConceptName, Concept>) -> Result<(), OntologyError> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Open,
        Done,
    }
    let mut marks: HashMap<&ConceptName, Mark> = HashMap::new();
    for start in concepts.keys() {
        if marks.contains_key(start) {
            continue;
        }
        // iterative DFS: (node, next parent index)
        let mut stack: Vec<(&ConceptName, usize)> = vec![(start, 0)];
        marks.insert(start, Mark::Open);
        while let Some((node, idx)) = stack.pop() {
            let parents = &concepts[node].parents;
            if idx < parents.len() {
                stack.push((node, idx + 1));
                let next = &parents[idx];
                match marks.get(next) {
                    Some(Mark::Open) => return Err(OntologyError::Cycle(next.clone())),
                    Some(Mark::Done) => {}
                    None => {
                        marks.insert(next, Mark::Open);
                        stack.push((next, 0));
                    }
                }
            } else {
                marks.insert(node, Mark::Done);
            }
        }
    }
    Ok(())
}
