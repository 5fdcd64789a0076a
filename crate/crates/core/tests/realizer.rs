use std::collections::HashSet;

use compeval::event::*;
use compeval::generator::{generate_pool, FeatureDomains, GenerationConfig};
use compeval::realizer::{auxiliary_chain, Realizer, Relation, TokenPart};

fn v() -> Vocabulary {
    Vocabulary::default_english()
}

fn feats(voice: Voice, tense: Tense, aspect: Aspect, polarity: Polarity) -> SyntacticFeatures {
    SyntacticFeatures { voice, tense, aspect, polarity, adverbs: Vec::new() }
}

fn arg(vocab: &Vocabulary, noun: &str, number: Number, role: Role) -> ArgumentSlot {
    ArgumentSlot::new(vocab.id(noun), number, role)
}

fn figure_event(vocab: &Vocabulary) -> EventRepresentation {
    let sleeping = ClauseFrame::intransitive(
        vocab.id("sleep"),
        arg(vocab, "student", Number::Singular, Role::Agent),
        feats(Voice::Active, Tense::Present, Aspect::Progressive, Polarity::Positive),
    );
    let main = ClauseFrame::transitive(
        vocab.id("help"),
        arg(vocab, "professor", Number::Singular, Role::Agent),
        arg(vocab, "student", Number::Singular, Role::Patient).with_relative(Gap::Subject, sleeping),
        feats(Voice::Passive, Tense::Past, Aspect::Simple, Polarity::Negative),
    );
    EventRepresentation::new(0, main)
}

#[test]
fn realizes_figure_sentence() {
    let vocab = v();
    let s = Realizer::new(&vocab).unwrap().realize(&figure_event(&vocab)).unwrap();
    assert_eq!(s.text(), "the student that is sleeping was not helped by the professor");
    assert_eq!(s.gold.polarity_of(vocab.id("sleep")), Some(Polarity::Positive));
    assert_eq!(s.gold.polarity_of(vocab.id("help")), Some(Polarity::Negative));
    assert_eq!(s.gold.relation(vocab.id("professor"), vocab.id("help")), Some(Relation::Agent));
    assert_eq!(s.gold.relation(vocab.id("student"), vocab.id("help")), Some(Relation::Patient));
    assert_eq!(s.gold.relation(vocab.id("student"), vocab.id("sleep")), Some(Relation::Agent));
    assert_eq!(s.gold.relation(vocab.id("professor"), vocab.id("sleep")), Some(Relation::Unrelated));
}

#[test]
fn realizes_table_sentences() {
    let vocab = v();
    let r = Realizer::new(&vocab).unwrap();
    let men = ClauseFrame::intransitive(
        vocab.id("sleep"),
        arg(&vocab, "man", Number::Plural, Role::Agent),
        feats(Voice::Active, Tense::Past, Aspect::Progressive, Polarity::Positive),
    );
    assert_eq!(r.realize(&EventRepresentation::new(1, men)).unwrap().text(), "the men were sleeping");

    let meeting = ClauseFrame::transitive(
        vocab.id("meet"),
        arg(&vocab, "student", Number::Singular, Role::Agent),
        arg(&vocab, "lawyer", Number::Singular, Role::Patient),
        feats(Voice::Active, Tense::Present, Aspect::Progressive, Polarity::Positive),
    );
    let main = ClauseFrame::transitive(
        vocab.id("follow"),
        arg(&vocab, "woman", Number::Singular, Role::Agent),
        arg(&vocab, "lawyer", Number::Singular, Role::Patient).with_relative(Gap::Object, meeting),
        feats(Voice::Active, Tense::Past, Aspect::Simple, Polarity::Positive),
    );
    let s = r.realize(&EventRepresentation::new(2, main)).unwrap();
    assert_eq!(s.text(), "the woman followed the lawyer that the student is meeting");
    assert_eq!(s.gold.relation(vocab.id("lawyer"), vocab.id("meet")), Some(Relation::Patient));
}

#[test]
fn passive_keeps_agent_role() {
    let vocab = v();
    let main = ClauseFrame::transitive(
        vocab.id("help"),
        arg(&vocab, "professor", Number::Singular, Role::Agent),
        arg(&vocab, "student", Number::Singular, Role::Patient),
        feats(Voice::Passive, Tense::Past, Aspect::Simple, Polarity::Positive),
    );
    let s = Realizer::new(&vocab).unwrap().realize(&EventRepresentation::new(0, main)).unwrap();
    assert_eq!(s.text(), "the student was helped by the professor");
    assert_eq!(s.gold.relation(vocab.id("professor"), vocab.id("help")), Some(Relation::Agent));
}

#[test]
fn adverbs_follow_negation_or_precede_verb() {
    let vocab = v();
    let mut neg = feats(Voice::Active, Tense::Present, Aspect::Progressive, Polarity::Negative);
    neg.adverbs = vec![vocab.id("actually")];
    let mut pos = feats(Voice::Active, Tense::Present, Aspect::Progressive, Polarity::Positive);
    pos.adverbs = vec![vocab.id("totally")];
    let rc = ClauseFrame::intransitive(vocab.id("sleep"), arg(&vocab, "student", Number::Singular, Role::Agent), pos);
    let main = ClauseFrame::transitive(
        vocab.id("help"),
        arg(&vocab, "professor", Number::Singular, Role::Agent),
        arg(&vocab, "student", Number::Singular, Role::Patient).with_relative(Gap::Subject, rc),
        neg,
    );
    let s = Realizer::new(&vocab).unwrap().realize(&EventRepresentation::new(0, main)).unwrap();
    assert_eq!(s.text(), "the professor is not actually helping the student that is totally sleeping");

    let mut simple = feats(Voice::Active, Tense::Past, Aspect::Simple, Polarity::Positive);
    simple.adverbs = vec![vocab.id("really"), vocab.id("actually")];
    let f = ClauseFrame::intransitive(vocab.id("dance"), arg(&vocab, "doctor", Number::Plural, Role::Agent), simple);
    let s = Realizer::new(&vocab).unwrap().realize(&EventRepresentation::new(0, f)).unwrap();
    assert_eq!(s.text(), "the doctors really actually danced");
}

#[test]
fn rejects_invalid_event() {
    let vocab = v();
    let mut f = ClauseFrame::intransitive(
        vocab.id("sleep"),
        arg(&vocab, "man", Number::Plural, Role::Agent),
        SyntacticFeatures::default(),
    );
    f.patient = Some(arg(&vocab, "woman", Number::Singular, Role::Patient));
    assert!(Realizer::new(&vocab).unwrap().realize(&EventRepresentation::new(0, f)).is_err());
}

fn small_pool(adverbs: bool) -> Vec<EventRepresentation> {
    let full = v();
    let keep = ["man", "woman", "student", "sleep", "help", "meet", "really", "simply"];
    let entries = keep.iter().map(|n| full.entry(full.id(n)).unwrap().clone()).collect();
    let vocab = Vocabulary::new(entries).unwrap();
    let mut cfg = GenerationConfig::new(vocab.clone());
    if adverbs {
        cfg.domains = FeatureDomains {
            adverb_sequences: vec![vec![], vec![vocab.id("really")], vec![vocab.id("simply"), vocab.id("really")]],
            ..FeatureDomains::default()
        };
    }
    generate_pool(&cfg).unwrap().events
}

#[test]
fn realization_is_injective_and_agrees() {
    let full = v();
    let keep = ["man", "woman", "student", "sleep", "help", "meet", "really", "simply"];
    let entries = keep.iter().map(|n| full.entry(full.id(n)).unwrap().clone()).collect();
    let vocab = Vocabulary::new(entries).unwrap();
    let r = Realizer::new(&vocab).unwrap();
    for adverbs in [false, true] {
        let pool = small_pool(adverbs);
        assert!(pool.len() > 1000);
        let mut seen = HashSet::new();
        for e in &pool {
            let s = r.realize(e).unwrap();
            assert_eq!(r.realize(e).unwrap(), s);
            assert!(seen.insert(s.tokens.clone()), "duplicate surface {}", s.text());
            // the finite element agrees with the surface subject
            for (site, frame) in e.clauses() {
                let first = s
                    .alignment
                    .iter()
                    .position(|a| a.site == site && matches!(a.part, TokenPart::Auxiliary | TokenPart::Verb))
                    .unwrap();
                let chain = auxiliary_chain(&frame.features, frame.surface_subject().number);
                let expected_first = chain.auxiliaries.first().map(|a| a.to_string());
                if let Some(aux) = expected_first {
                    assert_eq!(s.tokens[first], aux);
                }
                let finite = &s.tokens[first];
                let plural = frame.surface_subject().number == Number::Plural;
                match finite.as_str() {
                    "is" | "was" | "does" => assert!(!plural),
                    "are" | "were" | "do" => assert!(plural),
                    _ => {}
                }
            }
        }
    }
}

fn broad_pool() -> &'static Vec<EventRepresentation> {
    static P: std::sync::OnceLock<Vec<EventRepresentation>> = std::sync::OnceLock::new();
    P.get_or_init(|| {
        let vocab = v();
        let mut cfg = GenerationConfig::new(vocab.clone());
        cfg.domains.adverb_sequences = compeval::generator::adverb_sequences(&vocab.adverbs()[..4], 0, 2);
        cfg.max_pool_size = Some(5000);
        cfg.seed = 17;
        generate_pool(&cfg).unwrap().events
    })
}

proptest::proptest! {
    #[test]
    fn realization_is_pure_and_round_trips(idx in 0usize..5000) {
        let vocab = v();
        let pool = broad_pool();
        let e = &pool[idx % pool.len()];
        let a = Realizer::new(&vocab).unwrap().realize(e).unwrap();
        let b = Realizer::new(&vocab).unwrap().realize(e).unwrap();
        proptest::prop_assert_eq!(&a, &b);
        proptest::prop_assert!(a.tokens.iter().all(|t| !t.is_empty() && t.chars().all(|c| c.is_ascii_lowercase())));
        proptest::prop_assert_eq!(a.alignment.len(), a.tokens.len());
        for (_, c) in e.clauses() {
            proptest::prop_assert_eq!(a.gold.polarity_of(c.verb), Some(c.features.polarity));
        }
    }
}
