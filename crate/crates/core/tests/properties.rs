use std::collections::{BTreeMap, BTreeSet, VecDeque};

use lexiforge::chain::{
    bindings, is_cumulative, run_step, BackendError, ChainContext, LlmBackend, ModelParams,
    PromptSet, PromptTemplate, TemplateId,
};
use lexiforge::corpus::{first_match, tokenize, CorpusIndex};
use lexiforge::filter::{
    filter_candidates, parse_mwe_list, render_mwe_list, segment, FilterOptions, DELIMITER,
};
use lexiforge::gmr::{instantiate, InstantiateOptions, SemanticTemplate};
use lexiforge::lexicon::{ExtraLexItem, LexSense, Lexicon, Pos, SemStruc, SynStruc};
use lexiforge::morphology::{Morphology, ParadigmSlot};
use lexiforge::ontology::{CaseRole, Concept, ConceptName, Ontology, OntologyError};
use proptest::prelude::*;

fn name(i: usize) -> ConceptName {
    ConceptName::new(format!("C{i}"))
}

fn concepts(parents: &[Vec<usize>]) -> Vec<Concept> {
    parents
        .iter()
        .enumerate()
        .map(|(i, ps)| Concept {
            name: name(i),
            parents: ps.iter().map(|&p| name(p)).collect(),
            slots: BTreeMap::new(),
        })
        .collect()
}

fn kahn_is_cyclic(parents: &[Vec<usize>]) -> bool {
    let n = parents.len();
    let mut indegree = vec![0usize; n];
    let mut children = vec![Vec::new(); n];
    for (i, ps) in parents.iter().enumerate() {
        for &p in ps {
            indegree[i] += 1;
            children[p].push(i);
        }
    }
    let mut queue: VecDeque<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
    let mut seen = 0;
    while let Some(i) = queue.pop_front() {
        seen += 1;
        for &c in &children[i] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                queue.push_back(c);
            }
        }
    }
    seen < n
}

/// Parent lists over nodes 0..n, duplicates removed.
fn any_graph() -> impl Strategy<Value = Vec<Vec<usize>>> {
    (2usize..9).prop_flat_map(|n| {
        proptest::collection::vec(proptest::collection::btree_set(0..n, 0..3), n)
            .prop_map(|v| v.into_iter().map(|s| s.into_iter().collect()).collect())
    })
}

/// Acyclic: each node i > 0 has parents among 0..i.
fn dag() -> impl Strategy<Value = Vec<Vec<usize>>> {
    proptest::collection::vec(proptest::collection::btree_set(0usize..64, 1..3), 1..10).prop_map(
        |raw| {
            let mut out = vec![Vec::new()];
            for (k, set) in raw.into_iter().enumerate() {
                let i = k + 1;
                let ps: BTreeSet<usize> = set.into_iter().map(|p| p % i).collect();
                out.push(ps.into_iter().collect());
            }
            out
        },
    )
}

proptest! {
    #[test]
    fn cycle_detection_agrees_with_kahn(parents in any_graph()) {
        let result = Ontology::from_concepts(concepts(&parents));
        let cyclic = kahn_is_cyclic(&parents);
        prop_assert_eq!(matches!(result, Err(OntologyError::Cycle(_))), cyclic);
        if !cyclic {
            let roots = parents.iter().filter(|p| p.is_empty()).count();
            prop_assert_eq!(result.is_ok(), roots == 1);
        }
    }

    #[test]
    fn subsumes_agrees_with_bfs(parents in dag()) {
        let ont = Ontology::from_concepts(concepts(&parents)).unwrap();
        let n = parents.len();
        for d in 0..n {
            let mut reach = BTreeSet::from([d]);
            let mut queue = VecDeque::from([d]);
            while let Some(x) = queue.pop_front() {
                for &p in &parents[x] {
                    if reach.insert(p) {
                        queue.push_back(p);
                    }
                }
            }
            for a in 0..n {
                prop_assert_eq!(ont.subsumes(&name(a), &name(d)).unwrap(), reach.contains(&a));
            }
        }
        prop_assert_eq!(ont.root(), &name(0));
    }
}

fn word() -> impl Strategy<Value = String> {
    "[a-z]{1,8}"
}

fn sense() -> impl Strategy<Value = LexSense> {
    (
        word(),
        proptest::collection::vec(word(), 0..3),
        1u32..9,
        prop::bool::ANY,
        proptest::collection::vec("[A-Za-z ,.'’]{0,30}", 0..3),
        prop::sample::select(vec!["HUMAN", "HIRE", "MATTER"]),
    )
        .prop_map(|(head, extras, n, learned, examples, concept)| {
            let lemma = std::iter::once(head.clone())
                .chain(extras.iter().cloned())
                .collect::<Vec<_>>()
                .join(" ");
            LexSense {
                sense_id: format!("{}-v{n}", lemma.replace(' ', "_")),
                lemma,
                pos: Pos::Verb,
                syn_struc: Some(SynStruc {
                    head,
                    subject_var: "$var1".into(),
                    object_var: "$var2".into(),
                    extras: extras
                        .into_iter()
                        .map(|surface| ExtraLexItem {
                            surface,
                            null_sem: true,
                        })
                        .collect(),
                }),
                sem_struc: SemStruc {
                    concept: concept.into(),
                    role_bindings: [(CaseRole::Agent, "$var1".to_string())]
                        .into_iter()
                        .collect(),
                    constraints: BTreeMap::new(),
                },
                examples,
                learned,
                provenance: learned.then(|| "run-x".to_string()),
            }
        })
}

proptest! {
    #[test]
    fn lexicon_round_trip(senses in proptest::collection::vec(sense(), 0..8)) {
        let mut lex = Lexicon::new();
        for s in senses {
            let _ = lex.add_sense(s);
        }
        let json = lex.to_json();
        let back = Lexicon::from_json(&json).unwrap();
        prop_assert_eq!(back.to_json(), json);
        for s in lex.senses() {
            prop_assert_eq!(back.get(&s.sense_id), Some(s));
        }
    }

    #[test]
    fn segments_never_contain_the_delimiter(raw in "([a-z .|]{0,12}(\\|\\|)?){0,6}") {
        for s in segment(&raw) {
            prop_assert!(!s.text.contains(DELIMITER));
            prop_assert!(!s.text.is_empty());
            prop_assert_eq!(s.text.trim(), s.text.as_str());
        }
    }

    #[test]
    fn filtered_candidates_are_an_ordered_subset_of_segments(
        parts in proptest::collection::vec(prop::sample::select(vec![
            "Here you go:", "They took on staff.", "He takes it on.", "Nothing here.", "take  on", "",
        ]), 0..8),
        require in prop::bool::ANY,
    ) {
        let raw = parts.join(" || ");
        let opts = FilterOptions { require_mwe: require, ..Default::default() };
        let out = filter_candidates(&raw, "take on", Morphology::english(), opts);
        let segs: Vec<String> = segment(&raw).into_iter().filter(|s| !s.undelimited).map(|s| s.text).collect();
        let mut it = segs.iter();
        for c in &out {
            prop_assert!(it.any(|s| s == c), "{c:?} out of order or absent");
        }
    }

    #[test]
    fn mwe_list_parse_is_idempotent(items in proptest::collection::vec("[A-Za-z' ]{0,15}", 0..6), noise in "[a-z ]{0,10}") {
        let raw = format!("{noise}[{}]{noise}", items.join(","));
        let first = parse_mwe_list(&raw).unwrap();
        let second = parse_mwe_list(&render_mwe_list(&first.mwes)).unwrap();
        prop_assert_eq!(&second.mwes, &first.mwes);
        prop_assert!(second.notes.is_empty());
        for m in &first.mwes {
            prop_assert!(m.split(' ').count() >= 2);
            prop_assert_eq!(m.to_lowercase(), m.clone());
        }
    }
}

fn brute_force(tokens: &[String], variants: &[Vec<String>], gap: usize) -> Option<Vec<usize>> {
    let mut best: Option<Vec<usize>> = None;
    for v in variants {
        let k = v.len();
        // enumerate all increasing k-tuples
        let mut stack: Vec<Vec<usize>> = (0..tokens.len()).map(|i| vec![i]).collect();
        while let Some(t) = stack.pop() {
            let ok = t.iter().enumerate().all(|(j, &p)| tokens[p] == v[j])
                && t.windows(2).all(|w| w[1] - w[0] - 1 <= gap);
            if !ok {
                continue;
            }
            if t.len() == k {
                if best.as_ref().is_none_or(|b| t < *b) {
                    best = Some(t);
                }
                continue;
            }
            let last = *t.last().unwrap();
            for p in last + 1..tokens.len() {
                let mut next = t.clone();
                next.push(p);
                stack.push(next);
            }
        }
    }
    best
}

fn tokens_of(words: &[&str]) -> Vec<String> {
    words.iter().map(|w| w.to_string()).collect()
}

proptest! {
    #[test]
    fn first_match_equals_brute_force(
        sentence in proptest::collection::vec(prop::sample::select(vec!["a", "b", "c", "x"]), 0..12),
        variants in proptest::collection::vec(
            proptest::collection::vec(prop::sample::select(vec!["a", "b", "c"]), 1..4), 1..3),
        gap in 0usize..4,
    ) {
        let tokens = tokens_of(&sentence);
        let variants: Vec<Vec<String>> = variants.iter().map(|v| tokens_of(v)).collect();
        prop_assert_eq!(first_match(&tokens, &variants, gap), brute_force(&tokens, &variants, gap));
    }

    #[test]
    fn wider_gap_never_loses_a_match(
        sentence in proptest::collection::vec(prop::sample::select(vec!["run", "ran", "off", "the", "dog"]), 0..12),
        gap in 0usize..5,
    ) {
        let morph = Morphology::english();
        let variants = lexiforge::corpus::variant_token_lists(morph, "run off").unwrap();
        let tokens = tokens_of(&sentence);
        if first_match(&tokens, &variants, gap).is_some() {
            prop_assert!(first_match(&tokens, &variants, gap + 1).is_some());
        }
    }

    #[test]
    fn index_search_matches_linear_scan(
        lines in proptest::collection::vec(
            proptest::collection::vec(prop::sample::select(vec!["took", "take", "a", "shot", "on", "the"]), 0..8), 0..10),
        gap in 0usize..3,
        parts in 1usize..4,
    ) {
        let text = lines.iter().map(|l| l.join(" ")).collect::<Vec<_>>().join("\n");
        let morph = Morphology::english();
        let variants = lexiforge::corpus::variant_token_lists(morph, "take a shot").unwrap();
        let index = CorpusIndex::from_text_partitioned(&text, parts);
        prop_assert_eq!(&index, &CorpusIndex::from_text(&text));
        let hits = index.find_sentences(morph, "take a shot", gap, usize::MAX).unwrap();
        let expected: Vec<u32> = text
            .split('\n')
            .enumerate()
            .filter(|(_, l)| first_match(&tokenize(l), &variants, gap).is_some())
            .map(|(i, _)| i as u32 + 1)
            .collect();
        prop_assert_eq!(hits.iter().map(|h| h.sentence_id).collect::<Vec<_>>(), expected);
    }

    #[test]
    fn regular_paradigms_are_well_formed(stem in "[bcdfglmnprst][aeiou][a-z]{1,5}") {
        let m = Morphology::english();
        let p = m.verb_forms(&stem).unwrap();
        prop_assert_eq!(p.get(ParadigmSlot::Base), stem.as_str());
        prop_assert!(p.get(ParadigmSlot::ThirdSingular).ends_with('s'));
        prop_assert!(p.get(ParadigmSlot::Gerund).ends_with("ing"));
        let v = m.mwe_variants(&format!("{stem} up")).unwrap();
        prop_assert_eq!(v.len(), p.distinct_forms().len());
        for x in v {
            prop_assert_eq!(x.tokens.last().unwrap().as_str(), "up");
            prop_assert!(p.contains(x.head()));
        }
    }
}

fn gmr_world(agents: usize, themes: usize) -> (Lexicon, Ontology, SemanticTemplate) {
    let c = |n: &str, p: &[&str]| Concept {
        name: n.into(),
        parents: p.iter().map(|x| ConceptName::from(*x)).collect(),
        slots: BTreeMap::new(),
    };
    let ont = Ontology::from_concepts(vec![
        c("ALL", &[]),
        c("A", &["ALL"]),
        c("T", &["ALL"]),
        c("EV", &["ALL"]),
    ])
    .unwrap();
    let mut lex = Lexicon::new();
    let noun = |id: String, concept: &str| LexSense {
        lemma: id.clone(),
        sense_id: id,
        pos: Pos::Noun,
        syn_struc: None,
        sem_struc: SemStruc {
            concept: concept.into(),
            role_bindings: BTreeMap::new(),
            constraints: BTreeMap::new(),
        },
        examples: vec![],
        learned: false,
        provenance: None,
    };
    for i in 0..agents {
        lex.add_sense(noun(format!("agent-{i}"), "A")).unwrap();
    }
    for i in 0..themes {
        lex.add_sense(noun(format!("theme-{i}"), "T")).unwrap();
    }
    let template = SemanticTemplate {
        seed_sense_id: "do-v1".into(),
        concept: "EV".into(),
        role_constraints: [(CaseRole::Agent, "A".into()), (CaseRole::Theme, "T".into())]
            .into_iter()
            .collect(),
    };
    (lex, ont, template)
}

proptest! {
    #[test]
    fn gmr_sampling_is_sound_and_deterministic(agents in 0usize..6, themes in 0usize..6, cap in 1usize..40, seed in any::<u64>()) {
        let (lex, ont, t) = gmr_world(agents, themes);
        let opts = InstantiateOptions { cap, rng_seed: seed, ..Default::default() };
        let a = instantiate(&t, &lex, &ont, &opts).unwrap();
        let b = instantiate(&t, &lex, &ont, &opts).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.gmrs.len(), cap.min(agents * themes));
        let pairs: Vec<(String, String)> = a.gmrs.iter()
            .map(|g| (g.fillers[&CaseRole::Agent].clone(), g.fillers[&CaseRole::Theme].clone()))
            .collect();
        let distinct: BTreeSet<_> = pairs.iter().collect();
        prop_assert_eq!(distinct.len(), pairs.len());
        for (ag, th) in &pairs {
            prop_assert!(ag.starts_with("agent-") && th.starts_with("theme-"));
        }
        if cap >= agents * themes {
            let mut full = Vec::new();
            for i in 0..agents {
                for j in 0..themes {
                    full.push((format!("agent-{i}"), format!("theme-{j}")));
                }
            }
            prop_assert_eq!(pairs, full);
        }
    }
}

struct Echo;

impl LlmBackend for Echo {
    fn complete(&self, prompt: &str, _: &ModelParams) -> Result<String, BackendError> {
        Ok(format!("reply {}", prompt.len()))
    }
}

proptest! {
    #[test]
    fn chains_are_cumulative(values in proptest::collection::vec("[ -~\n]{1,20}", 3), steps in 1usize..6) {
        let set = PromptSet::builtin();
        let params = ModelParams::default();
        let b = bindings([
            ("seed", values[0].clone()),
            ("text", values[1].clone()),
            ("mwe", values[2].clone()),
            ("mwe_list", "[x y]".into()),
            ("candidates", "|| x".into()),
        ]);
        let mut ctx = ChainContext::new(&set.base);
        for k in 0..steps {
            let t = [&set.mwe_generation, &set.sentence_generation, &set.validation][k % 3];
            run_step(&Echo, &mut ctx, t, &b, &params).unwrap();
        }
        prop_assert!(is_cumulative(ctx.turns()));
        for w in ctx.turns().windows(2) {
            prop_assert!(w[1].prompt.starts_with(&w[0].prompt));
        }
    }

    #[test]
    fn rendering_substitutes_values_verbatim(mwe in "[ -~]{0,20}", prefix in "[a-z ]{0,10}") {
        let t = PromptTemplate::new(TemplateId::SentenceGeneration, format!("{prefix}{{mwe}}!")).unwrap();
        let out = t.render(&bindings([("mwe", mwe.clone())])).unwrap();
        prop_assert_eq!(out, format!("{prefix}{mwe}!"));
    }
}
