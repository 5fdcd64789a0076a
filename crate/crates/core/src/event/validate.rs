use std::fmt;

use super::{
    ArgumentSlot, ClauseFrame, ClauseSite, EventRepresentation, Gap, LemmaId, PartOfSpeech, Role, Transitivity,
    Vocabulary, Voice, MAX_ADVERBS,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    PatientOnIntransitive(ClauseSite),
    MissingPatient(ClauseSite),
    PassiveIntransitive(ClauseSite),
    TooManyAdverbs(ClauseSite, usize),
    RoleMismatch(ClauseSite, Role),
    RelativeClauseCount(usize),
    NestedRelativeClause,
    GapMismatch(ClauseSite),
    ObjectGapNeedsActiveTransitive(ClauseSite),
    UnknownLemma(LemmaId),
    WrongPartOfSpeech { lemma: LemmaId, expected: PartOfSpeech },
    TransitivityMismatch(ClauseSite),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::PatientOnIntransitive(s) => write!(f, "patient on intransitive ({s})"),
            Violation::MissingPatient(s) => write!(f, "transitive frame without patient ({s})"),
            Violation::PassiveIntransitive(s) => write!(f, "passive voice on intransitive ({s})"),
            Violation::TooManyAdverbs(s, n) => write!(f, "{n} adverbs exceed {MAX_ADVERBS} ({s})"),
            Violation::RoleMismatch(s, r) => write!(f, "slot labelled {r} in wrong position ({s})"),
            Violation::RelativeClauseCount(n) => write!(f, "relative clause count > 1 ({n})"),
            Violation::NestedRelativeClause => f.write_str("relative clause inside a relative clause"),
            Violation::GapMismatch(s) => write!(f, "gapped argument differs from head noun ({s})"),
            Violation::ObjectGapNeedsActiveTransitive(s) => {
                write!(f, "object gap requires an active transitive relative clause ({s})")
            }
            Violation::UnknownLemma(l) => write!(f, "unknown lemma id {}", l.0),
            Violation::WrongPartOfSpeech { lemma, expected } => write!(f, "lemma id {} is not a {expected}", lemma.0),
            Violation::TransitivityMismatch(s) => write!(f, "verb class disagrees with frame transitivity ({s})"),
        }
    }
}

/// Outcome of [`validate_event`]: empty means the event is well-formed.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Verdict {
    pub violations: Vec<Violation>,
}

impl Verdict {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return f.write_str("ok");
        }
        let msgs: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        f.write_str(&msgs.join("; "))
    }
}

/// Lists every violated invariant of `event` against `vocab`.
pub fn validate_event(event: &EventRepresentation, vocab: &Vocabulary) -> Verdict {
    let mut v = Vec::new();
    check_frame(&event.main, ClauseSite::Main, vocab, &mut v);

    let rc_count = event.relative_clause_count();
    if rc_count > 1 {
        v.push(Violation::RelativeClauseCount(rc_count));
    }
    for site in [ClauseSite::AgentRelative, ClauseSite::PatientRelative] {
        let Some(rc) = event.relative(site) else { continue };
        let head = if site == ClauseSite::AgentRelative { &event.main.agent } else { event.main.patient.as_ref().unwrap() };
        let frame = rc.frame.as_ref();
        check_frame(frame, site, vocab, &mut v);
        if frame.agent.relative_clause.is_some()
            || frame.patient.as_ref().is_some_and(|p| p.relative_clause.is_some())
        {
            v.push(Violation::NestedRelativeClause);
        }
        if rc.gap == Gap::Object
            && (frame.transitivity != Transitivity::Transitive || frame.features.voice != Voice::Active)
        {
            v.push(Violation::ObjectGapNeedsActiveTransitive(site));
        }
        if let Some(gapped) = frame.slot(frame.gapped_role(rc.gap)) {
            if gapped.noun != head.noun || gapped.number != head.number {
                v.push(Violation::GapMismatch(site));
            }
        }
    }
    Verdict { violations: v }
}

fn check_slot(slot: &ArgumentSlot, role: Role, site: ClauseSite, vocab: &Vocabulary, v: &mut Vec<Violation>) {
    if slot.role != role {
        v.push(Violation::RoleMismatch(site, slot.role));
    }
    check_pos(slot.noun, PartOfSpeech::Noun, vocab, v);
}

fn check_pos(lemma: LemmaId, expected: PartOfSpeech, vocab: &Vocabulary, v: &mut Vec<Violation>) {
    match vocab.pos(lemma) {
        None => v.push(Violation::UnknownLemma(lemma)),
        Some(p) if p != expected => v.push(Violation::WrongPartOfSpeech { lemma, expected }),
        _ => {}
    }
}

fn check_frame(frame: &ClauseFrame, site: ClauseSite, vocab: &Vocabulary, v: &mut Vec<Violation>) {
    match (frame.transitivity, &frame.patient) {
        (Transitivity::Intransitive, Some(_)) => v.push(Violation::PatientOnIntransitive(site)),
        (Transitivity::Transitive, None) => v.push(Violation::MissingPatient(site)),
        _ => {}
    }
    if frame.transitivity == Transitivity::Intransitive && frame.features.voice == Voice::Passive {
        v.push(Violation::PassiveIntransitive(site));
    }
    if frame.features.adverbs.len() > MAX_ADVERBS {
        v.push(Violation::TooManyAdverbs(site, frame.features.adverbs.len()));
    }
    check_pos(frame.verb, PartOfSpeech::Verb, vocab, v);
    if let Some(class) = vocab.transitivity(frame.verb) {
        if class != frame.transitivity {
            v.push(Violation::TransitivityMismatch(site));
        }
    }
    for adv in &frame.features.adverbs {
        check_pos(*adv, PartOfSpeech::Adverb, vocab, v);
    }
    check_slot(&frame.agent, Role::Agent, site, vocab, v);
    if let Some(p) = &frame.patient {
        check_slot(p, Role::Patient, site, vocab, v);
    }
}
