use std::collections::HashSet;

use compeval::event::*;
use compeval::generator::*;
use proptest::prelude::*;

fn restricted(names: &[&str]) -> Vocabulary {
    let full = Vocabulary::default_english();
    Vocabulary::new(names.iter().map(|n| full.entry(full.id(n)).unwrap().clone()).collect()).unwrap()
}

fn features(d: &FeatureDomains) -> Vec<SyntacticFeatures> {
    let mut out = Vec::new();
    for &voice in Voice::ALL {
        for &tense in &d.tenses {
            for &aspect in &d.aspects {
                for &polarity in &d.polarities {
                    for adverbs in &d.adverb_sequences {
                        out.push(SyntacticFeatures { voice, tense, aspect, polarity, adverbs: adverbs.clone() });
                    }
                }
            }
        }
    }
    out
}

/// Every frame over the raw cross product (any verb, any voice, optional patient).
fn raw_frames(vocab: &Vocabulary, d: &FeatureDomains) -> Vec<ClauseFrame> {
    let mut out = Vec::new();
    let slots = |role| {
        let mut s = Vec::new();
        for n in vocab.nouns() {
            for &num in Number::ALL {
                s.push(ArgumentSlot::new(n, num, role));
            }
        }
        s
    };
    let feats = features(d);
    for verb in vocab.verbs() {
        for agent in slots(Role::Agent) {
            let patients: Vec<Option<ArgumentSlot>> =
                std::iter::once(None).chain(slots(Role::Patient).into_iter().map(Some)).collect();
            for patient in &patients {
                for f in &feats {
                    let transitivity =
                        if patient.is_some() { Transitivity::Transitive } else { Transitivity::Intransitive };
                    out.push(ClauseFrame {
                        verb,
                        transitivity,
                        agent: agent.clone(),
                        patient: patient.clone(),
                        features: f.clone(),
                    });
                }
            }
        }
    }
    out
}

/// Noun mentions that are not filled by a relative clause's head.
fn free_nouns(e: &EventRepresentation) -> Vec<LemmaId> {
    let mut out = vec![e.main.agent.noun];
    out.extend(e.main.patient.as_ref().map(|p| p.noun));
    for site in [ClauseSite::AgentRelative, ClauseSite::PatientRelative] {
        if let Some(rc) = e.relative(site) {
            let gapped = rc.frame.gapped_role(rc.gap);
            let other = if gapped == Role::Agent { Role::Patient } else { Role::Agent };
            out.extend(rc.frame.slot(other).map(|s| s.noun));
        }
    }
    out
}

fn population_rules(e: &EventRepresentation) -> bool {
    let verbs = e.verbs();
    let nouns = free_nouns(e);
    verbs.iter().collect::<HashSet<_>>().len() == verbs.len() && nouns.iter().collect::<HashSet<_>>().len() == nouns.len()
}

/// Brute-force enumerator: raw cross product of main frames and optional
/// relative clauses, filtered by validate_event and the population rules.
fn brute_force(vocab: &Vocabulary, d: &FeatureDomains, max_rc: usize) -> HashSet<EventRepresentation> {
    let frames = raw_frames(vocab, d);
    let mut out = HashSet::new();
    for main in &frames {
        let base = EventRepresentation::new(0, main.clone());
        if validate_event(&base, vocab).is_ok() && population_rules(&base) {
            out.insert(base);
        }
        if max_rc == 0 {
            continue;
        }
        for site in [ClauseSite::AgentRelative, ClauseSite::PatientRelative] {
            if site == ClauseSite::PatientRelative && main.patient.is_none() {
                continue;
            }
            for &gap in Gap::ALL {
                for rc in &frames {
                    let mut m = main.clone();
                    let head = match site {
                        ClauseSite::AgentRelative => &mut m.agent,
                        _ => m.patient.as_mut().unwrap(),
                    };
                    head.relative_clause = Some(RelativeClause { gap, frame: Box::new(rc.clone()) });
                    let e = EventRepresentation::new(0, m);
                    if validate_event(&e, vocab).is_ok() && population_rules(&e) {
                        out.insert(e);
                    }
                }
            }
        }
    }
    out
}

#[test]
fn intransitive_example_yields_32_events() {
    let mut cfg = GenerationConfig::new(restricted(&["man", "woman", "sleep"]));
    cfg.domains.voices = vec![Voice::Active];
    let events: Vec<_> =
        populate(StructuralTemplate::simple(Transitivity::Intransitive), &PartialEvent::wildcard(), &cfg)
            .unwrap()
            .collect();
    assert_eq!(events.len(), 2 * 2 * 2 * 2 * 2);
}

#[test]
fn unknown_verb_gives_empty_stream() {
    let cfg = GenerationConfig::new(restricted(&["man", "woman", "dance"]));
    let mut p = PartialEvent::wildcard();
    p.main.verb = Field::Is(LemmaId(999));
    let n = populate(StructuralTemplate::simple(Transitivity::Intransitive), &p, &cfg).unwrap().count();
    assert_eq!(n, 0);
}

#[test]
fn fully_specified_partial_is_its_own_completion() {
    let vocab = Vocabulary::default_english();
    let cfg = GenerationConfig::new(vocab.clone());
    let mut cfg_pool = cfg.clone();
    cfg_pool.max_pool_size = Some(50);
    for e in generate_pool(&cfg_pool).unwrap().events {
        let partial = PartialEvent::from_event(&e);
        let out: Vec<_> = populate(StructuralTemplate::of_event(&e), &partial, &cfg).unwrap().collect();
        assert_eq!(out, vec![e]);
    }
}

#[test]
fn default_vocabulary_without_relatives_is_exhaustive() {
    let vocab = Vocabulary::default_english();
    let mut cfg = GenerationConfig::new(vocab.clone());
    cfg.limits = TemplateLimits::no_relatives();
    let pool = generate_pool(&cfg).unwrap();
    let expected = brute_force(&vocab, &cfg.domains, 0);
    assert_eq!(pool.len(), expected.len());
    assert_eq!(pool.events.iter().cloned().collect::<HashSet<_>>(), expected);
    // 2 intransitive verbs, 5 transitive; 7 nouns; 2 numbers per argument; 16 feature settings
    assert_eq!(pool.len(), 2 * 7 * 2 * 8 + 5 * 7 * 6 * 4 * 16);
}

#[test]
fn small_vocabulary_with_relatives_is_exhaustive() {
    let vocab = restricted(&["man", "woman", "student", "sleep", "help", "meet"]);
    let mut cfg = GenerationConfig::new(vocab.clone());
    cfg.domains.tenses = vec![Tense::Past];
    let pool = generate_pool(&cfg).unwrap();
    let expected = brute_force(&vocab, &cfg.domains, 1);
    assert_eq!(pool.len(), expected.len());
    assert_eq!(pool.events.iter().cloned().collect::<HashSet<_>>(), expected);
}

#[test]
fn negative_polarity_can_be_prohibited() {
    let mut cfg = GenerationConfig::new(Vocabulary::default_english());
    cfg.constraint = Constraint::parse("prohibit {\n  main.polarity = negative\n}\n", &cfg.vocabulary).unwrap();
    cfg.limits = TemplateLimits::no_relatives();
    let pool = generate_pool(&cfg).unwrap();
    assert!(!pool.is_empty());
    assert!(pool.events.iter().all(|e| e.clauses().all(|(_, c)| c.features.polarity == Polarity::Positive)));
}

fn constraint_strategy() -> impl Strategy<Value = String> {
    let keys = prop::sample::subsequence(
        vec![
            "main.voice = passive",
            "main.tense = past",
            "main.aspect = progressive",
            "main.polarity = negative",
            "main.agent.number = plural",
            "main.agent.rc = present",
            "main.patient.rc = none",
            "main.verb = help",
        ],
        0..4,
    );
    let banned = prop::sample::subsequence(vec!["lexemes = doctor", "main.aspect = simple", "main.agent.rc = none"], 0..2);
    (keys, banned).prop_map(|(req, pro)| {
        let mut t = format!("require {{\n{}\n}}\n", req.join("\n"));
        for p in pro {
            t.push_str(&format!("prohibit {{\n{p}\n}}\n"));
        }
        t
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn pools_are_sound_and_deterministic(text in constraint_strategy(), seed in 0u64..1000, cap in 50usize..400) {
        let vocab = Vocabulary::default_english();
        let mut cfg = GenerationConfig::new(vocab.clone());
        cfg.constraint = Constraint::parse(&text, &vocab).unwrap();
        cfg.max_pool_size = Some(cap);
        cfg.seed = seed;
        let pool = generate_pool(&cfg).unwrap();
        prop_assert!(pool.len() <= cap);
        for e in &pool.events {
            let verdict = validate_event(e, &vocab);
            prop_assert!(verdict.is_ok(), "{}", verdict);
            prop_assert!(match_constraint(e, &cfg.constraint));
            prop_assert!(population_rules(e));
        }
        prop_assert_eq!(pool.events.iter().collect::<HashSet<_>>().len(), pool.len());
        let again = generate_pool(&cfg).unwrap();
        prop_assert_eq!(&again, &pool);
        prop_assert_eq!(EventPool::events_from_text(&pool.to_text(&vocab), &vocab).unwrap(), pool.events);
    }
}
