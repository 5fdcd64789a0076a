//! Partially specified events and the key-path text vocabulary shared by the
//! constraint files and the pool record format.

use serde::{Deserialize, Serialize};

use super::{
    ArgumentSlot, Aspect, ClauseFrame, ClauseSite, EventRepresentation, Gap, LemmaId, Number, Polarity,
    RelativeClause, Role, SyntacticFeatures, Tense, Transitivity, Vocabulary, Voice,
};

/// A field that is either a wildcard or a concrete value.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum Field<T> {
    #[default]
    Any,
    Is(T),
}

impl<T: PartialEq> Field<T> {
    pub fn admits(&self, value: &T) -> bool {
        match self {
            Field::Any => true,
            Field::Is(v) => v == value,
        }
    }

    pub fn value(&self) -> Option<&T> {
        match self {
            Field::Any => None,
            Field::Is(v) => Some(v),
        }
    }

    pub fn is_any(&self) -> bool {
        matches!(self, Field::Any)
    }
}

/// Optional sub-structure: unconstrained, required absent, or present with constraints.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum Presence<T> {
    #[default]
    Any,
    Absent,
    Present(T),
}

impl<T: Default> Presence<T> {
    fn present_mut(&mut self) -> &mut T {
        if !matches!(self, Presence::Present(_)) {
            *self = Presence::Present(T::default());
        }
        match self {
            Presence::Present(v) => v,
            _ => unreachable!(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct PartialArg {
    pub noun: Field<LemmaId>,
    pub number: Field<Number>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct PartialClause {
    pub verb: Field<LemmaId>,
    pub transitivity: Field<Transitivity>,
    pub voice: Field<Voice>,
    pub tense: Field<Tense>,
    pub aspect: Field<Aspect>,
    pub polarity: Field<Polarity>,
    pub adverbs: Field<Vec<LemmaId>>,
    pub agent: PartialArg,
    pub patient: Presence<PartialArg>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct PartialRelative {
    pub gap: Field<Gap>,
    pub clause: PartialClause,
}

/// An event with a wildcard marker per field. The all-wildcard value matches every event.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct PartialEvent {
    pub main: PartialClause,
    pub agent_rc: Presence<PartialRelative>,
    pub patient_rc: Presence<PartialRelative>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum KeyPathError {
    #[error("unknown key path `{0}`")]
    UnknownKey(String),
    #[error("invalid value `{value}` for `{key}`")]
    BadValue { key: String, value: String },
    #[error("unknown lemma `{0}`")]
    UnknownLemma(String),
    #[error("`{key}` required as both `{existing}` and `{requested}`")]
    Conflict { key: String, existing: String, requested: String },
}

impl PartialArg {
    fn matches(&self, slot: &ArgumentSlot) -> bool {
        self.noun.admits(&slot.noun) && self.number.admits(&slot.number)
    }

    fn from_slot(slot: &ArgumentSlot) -> Self {
        PartialArg { noun: Field::Is(slot.noun), number: Field::Is(slot.number) }
    }

    fn to_slot(&self, role: Role) -> Option<ArgumentSlot> {
        Some(ArgumentSlot::new(*self.noun.value()?, *self.number.value()?, role))
    }
}

impl PartialClause {
    pub fn matches(&self, frame: &ClauseFrame) -> bool {
        let f = &frame.features;
        self.verb.admits(&frame.verb)
            && self.transitivity.admits(&frame.transitivity)
            && self.voice.admits(&f.voice)
            && self.tense.admits(&f.tense)
            && self.aspect.admits(&f.aspect)
            && self.polarity.admits(&f.polarity)
            && self.adverbs.admits(&f.adverbs)
            && self.agent.matches(&frame.agent)
            && match (&self.patient, &frame.patient) {
                (Presence::Any, _) => true,
                (Presence::Absent, p) => p.is_none(),
                (Presence::Present(_), None) => false,
                (Presence::Present(pa), Some(p)) => pa.matches(p),
            }
    }

    pub fn from_frame(frame: &ClauseFrame) -> Self {
        let f = &frame.features;
        PartialClause {
            verb: Field::Is(frame.verb),
            transitivity: Field::Is(frame.transitivity),
            voice: Field::Is(f.voice),
            tense: Field::Is(f.tense),
            aspect: Field::Is(f.aspect),
            polarity: Field::Is(f.polarity),
            adverbs: Field::Is(f.adverbs.clone()),
            agent: PartialArg::from_slot(&frame.agent),
            patient: match &frame.patient {
                None => Presence::Absent,
                Some(p) => Presence::Present(PartialArg::from_slot(p)),
            },
        }
    }

    fn to_frame(&self) -> Option<ClauseFrame> {
        let features = SyntacticFeatures {
            voice: *self.voice.value()?,
            tense: *self.tense.value()?,
            aspect: *self.aspect.value()?,
            polarity: *self.polarity.value()?,
            adverbs: self.adverbs.value()?.clone(),
        };
        let patient = match &self.patient {
            Presence::Any => return None,
            Presence::Absent => None,
            Presence::Present(p) => Some(p.to_slot(Role::Patient)?),
        };
        Some(ClauseFrame {
            verb: *self.verb.value()?,
            transitivity: *self.transitivity.value()?,
            agent: self.agent.to_slot(Role::Agent)?,
            patient,
            features,
        })
    }

    /// Lemmas fixed by this clause.
    fn fixed_lemmas(&self, out: &mut Vec<LemmaId>) {
        out.extend(self.verb.value().copied());
        out.extend(self.agent.noun.value().copied());
        if let Presence::Present(p) = &self.patient {
            out.extend(p.noun.value().copied());
        }
        if let Some(advs) = self.adverbs.value() {
            out.extend(advs.iter().copied());
        }
    }
}

impl PartialRelative {
    fn matches(&self, rc: &RelativeClause) -> bool {
        self.gap.admits(&rc.gap) && self.clause.matches(&rc.frame)
    }
}

fn presence_matches(p: &Presence<PartialRelative>, rc: Option<&RelativeClause>) -> bool {
    match (p, rc) {
        (Presence::Any, _) => true,
        (Presence::Absent, rc) => rc.is_none(),
        (Presence::Present(_), None) => false,
        (Presence::Present(pr), Some(rc)) => pr.matches(rc),
    }
}

impl PartialEvent {
    /// The all-wildcard partial event.
    pub fn wildcard() -> Self {
        Self::default()
    }

    /// True iff `event` unifies with this partial (wildcards match anything).
    pub fn matches(&self, event: &EventRepresentation) -> bool {
        self.main.matches(&event.main)
            && presence_matches(&self.agent_rc, event.relative(ClauseSite::AgentRelative))
            && match (&self.patient_rc, &event.main.patient) {
                (Presence::Any, _) => true,
                (Presence::Absent, None) => true,
                (Presence::Present(_), None) => false,
                (p, Some(_)) => presence_matches(p, event.relative(ClauseSite::PatientRelative)),
            }
    }

    /// The fully concrete partial describing `event`.
    pub fn from_event(event: &EventRepresentation) -> Self {
        let rc = |site| match event.relative(site) {
            None => Presence::Absent,
            Some(rc) => Presence::Present(PartialRelative {
                gap: Field::Is(rc.gap),
                clause: PartialClause::from_frame(&rc.frame),
            }),
        };
        let main = PartialClause::from_frame(&event.main);
        PartialEvent { main, agent_rc: rc(ClauseSite::AgentRelative), patient_rc: rc(ClauseSite::PatientRelative) }
    }

    /// Builds the event when every field is concrete.
    pub fn to_event(&self, id: u64) -> Option<EventRepresentation> {
        let mut main = self.main.to_frame()?;
        match &self.agent_rc {
            Presence::Any => return None,
            Presence::Absent => {}
            Presence::Present(pr) => {
                let frame = pr.clause.to_frame()?;
                main.agent = main.agent.with_relative(*pr.gap.value()?, frame);
            }
        }
        match (&self.patient_rc, main.patient.as_mut()) {
            (Presence::Any, Some(_)) => return None,
            (Presence::Present(_), None) => return None,
            (Presence::Present(pr), Some(patient)) => {
                let frame = pr.clause.to_frame()?;
                *patient = patient.clone().with_relative(*pr.gap.value()?, frame);
            }
            _ => {}
        }
        Some(EventRepresentation::new(id, main))
    }

    /// Partial clause at `site`, if the site is constrained to be present (always for main).
    pub fn clause(&self, site: ClauseSite) -> Option<&PartialClause> {
        match site {
            ClauseSite::Main => Some(&self.main),
            ClauseSite::AgentRelative => match &self.agent_rc {
                Presence::Present(pr) => Some(&pr.clause),
                _ => None,
            },
            ClauseSite::PatientRelative => match &self.patient_rc {
                Presence::Present(pr) => Some(&pr.clause),
                _ => None,
            },
        }
    }

    pub fn relative(&self, site: ClauseSite) -> Option<&Presence<PartialRelative>> {
        match site {
            ClauseSite::Main => None,
            ClauseSite::AgentRelative => Some(&self.agent_rc),
            ClauseSite::PatientRelative => Some(&self.patient_rc),
        }
    }

    /// Places `clause` at `site`, leaving everything else wildcarded.
    pub fn with_clause_at(clause: PartialClause, site: ClauseSite) -> Self {
        let mut out = PartialEvent::wildcard();
        match site {
            ClauseSite::Main => out.main = clause,
            ClauseSite::AgentRelative => {
                out.agent_rc = Presence::Present(PartialRelative { gap: Field::Any, clause })
            }
            ClauseSite::PatientRelative => {
                out.main.patient = Presence::Present(PartialArg::default());
                out.patient_rc = Presence::Present(PartialRelative { gap: Field::Any, clause })
            }
        }
        out
    }

    /// Lemmas pinned by concrete fields anywhere in the partial.
    pub fn fixed_lemmas(&self) -> Vec<LemmaId> {
        let mut out = Vec::new();
        self.main.fixed_lemmas(&mut out);
        for p in [&self.agent_rc, &self.patient_rc] {
            if let Presence::Present(pr) = p {
                pr.clause.fixed_lemmas(&mut out);
            }
        }
        out
    }

    /// Sets the field named by `key` (e.g. `main.agent.rc.polarity`) from its text value.
    pub fn set(&mut self, key: &str, value: &str, vocab: &Vocabulary) -> Result<(), KeyPathError> {
        // A relative clause on the patient implies the patient exists.
        if key.starts_with("main.patient.rc") && !(key == "main.patient.rc" && value == "none") {
            self.main.patient.present_mut();
        }
        let (target, rest) = self.resolve_mut(key)?;
        match target {
            Target::Relative(presence) => match rest {
                "" => set_presence(presence, key, value),
                "gap" => {
                    presence.present_mut().gap = Field::Is(parse_kw(key, value)?);
                    Ok(())
                }
                _ => set_clause_field(&mut presence.present_mut().clause, key, rest, value, vocab),
            },
            Target::Clause(clause) => set_clause_field(clause, key, rest, value, vocab),
        }
    }

    /// Resets the field named by `key` to a wildcard.
    pub fn unset(&mut self, key: &str) -> Result<(), KeyPathError> {
        let (target, rest) = self.resolve_mut(key)?;
        match target {
            Target::Relative(presence) => match rest {
                "" => *presence = Presence::Any,
                "gap" => {
                    if let Presence::Present(pr) = presence {
                        pr.gap = Field::Any;
                    }
                }
                _ => {
                    if let Presence::Present(pr) = presence {
                        unset_clause_field(&mut pr.clause, key, rest)?;
                    }
                }
            },
            Target::Clause(clause) => unset_clause_field(clause, key, rest)?,
        }
        Ok(())
    }

    fn resolve_mut<'a, 'k>(&'a mut self, key: &'k str) -> Result<(Target<'a>, &'k str), KeyPathError> {
        let unknown = || KeyPathError::UnknownKey(key.to_string());
        for (prefix, site) in [("main.agent.rc", ClauseSite::AgentRelative), ("main.patient.rc", ClauseSite::PatientRelative)] {
            if let Some(rest) = key.strip_prefix(prefix) {
                let rest = match rest.strip_prefix('.') {
                    Some(r) => r,
                    None if rest.is_empty() => "",
                    None => return Err(unknown()),
                };
                if rest.starts_with("agent.rc") || rest.starts_with("patient.rc") {
                    return Err(unknown());
                }
                let presence = match site {
                    ClauseSite::AgentRelative => &mut self.agent_rc,
                    _ => &mut self.patient_rc,
                };
                return Ok((Target::Relative(presence), rest));
            }
        }
        match key.strip_prefix("main.") {
            Some(rest) => Ok((Target::Clause(&mut self.main), rest)),
            None => Err(unknown()),
        }
    }

    /// Concrete fields as `(key, value)` pairs in a stable order.
    pub fn key_values(&self, vocab: &Vocabulary) -> Vec<(String, String)> {
        let mut out = Vec::new();
        clause_key_values("main", &self.main, vocab, &mut out);
        for (prefix, presence) in [("main.agent.rc", &self.agent_rc), ("main.patient.rc", &self.patient_rc)] {
            match presence {
                Presence::Any => {}
                Presence::Absent => out.push((prefix.to_string(), "none".to_string())),
                Presence::Present(pr) => {
                    out.push((prefix.to_string(), "present".to_string()));
                    if let Field::Is(g) = pr.gap {
                        out.push((format!("{prefix}.gap"), g.to_string()));
                    }
                    clause_key_values(prefix, &pr.clause, vocab, &mut out);
                }
            }
        }
        out
    }
}

enum Target<'a> {
    Clause(&'a mut PartialClause),
    Relative(&'a mut Presence<PartialRelative>),
}

fn parse_kw<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, KeyPathError> {
    value.parse().map_err(|_| KeyPathError::BadValue { key: key.to_string(), value: value.to_string() })
}

fn set_presence<T: Default>(presence: &mut Presence<T>, key: &str, value: &str) -> Result<(), KeyPathError> {
    match value {
        "none" => *presence = Presence::Absent,
        "present" => {
            presence.present_mut();
        }
        "any" | "*" => *presence = Presence::Any,
        _ => return Err(KeyPathError::BadValue { key: key.to_string(), value: value.to_string() }),
    }
    Ok(())
}

fn lemma(value: &str, vocab: &Vocabulary) -> Result<LemmaId, KeyPathError> {
    vocab.lookup(value).ok_or_else(|| KeyPathError::UnknownLemma(value.to_string()))
}

fn set_arg_field(arg: &mut PartialArg, key: &str, field: &str, value: &str, vocab: &Vocabulary) -> Result<(), KeyPathError> {
    match field {
        "noun" => arg.noun = Field::Is(lemma(value, vocab)?),
        "number" => arg.number = Field::Is(parse_kw(key, value)?),
        _ => return Err(KeyPathError::UnknownKey(key.to_string())),
    }
    Ok(())
}

fn set_clause_field(
    clause: &mut PartialClause,
    key: &str,
    field: &str,
    value: &str,
    vocab: &Vocabulary,
) -> Result<(), KeyPathError> {
    match field {
        "verb" => clause.verb = Field::Is(lemma(value, vocab)?),
        "transitivity" => clause.transitivity = Field::Is(parse_kw(key, value)?),
        "voice" => clause.voice = Field::Is(parse_kw(key, value)?),
        "tense" => clause.tense = Field::Is(parse_kw(key, value)?),
        "aspect" => clause.aspect = Field::Is(parse_kw(key, value)?),
        "polarity" => clause.polarity = Field::Is(parse_kw(key, value)?),
        "adverbs" => {
            let advs = if value == "-" || value == "none" {
                Vec::new()
            } else {
                value.split(',').map(|a| lemma(a.trim(), vocab)).collect::<Result<Vec<_>, _>>()?
            };
            clause.adverbs = Field::Is(advs);
        }
        "patient" => set_presence(&mut clause.patient, key, value)?,
        _ => {
            if let Some(f) = field.strip_prefix("agent.") {
                set_arg_field(&mut clause.agent, key, f, value, vocab)?;
            } else if let Some(f) = field.strip_prefix("patient.") {
                set_arg_field(clause.patient.present_mut(), key, f, value, vocab)?;
            } else {
                return Err(KeyPathError::UnknownKey(key.to_string()));
            }
        }
    }
    Ok(())
}

fn unset_clause_field(clause: &mut PartialClause, key: &str, field: &str) -> Result<(), KeyPathError> {
    match field {
        "verb" => clause.verb = Field::Any,
        "transitivity" => clause.transitivity = Field::Any,
        "voice" => clause.voice = Field::Any,
        "tense" => clause.tense = Field::Any,
        "aspect" => clause.aspect = Field::Any,
        "polarity" => clause.polarity = Field::Any,
        "adverbs" => clause.adverbs = Field::Any,
        "patient" => clause.patient = Presence::Any,
        "agent.noun" => clause.agent.noun = Field::Any,
        "agent.number" => clause.agent.number = Field::Any,
        "patient.noun" | "patient.number" => {
            if let Presence::Present(p) = &mut clause.patient {
                if field == "patient.noun" {
                    p.noun = Field::Any;
                } else {
                    p.number = Field::Any;
                }
            }
        }
        _ => return Err(KeyPathError::UnknownKey(key.to_string())),
    }
    Ok(())
}

fn clause_key_values(prefix: &str, c: &PartialClause, vocab: &Vocabulary, out: &mut Vec<(String, String)>) {
    let mut push = |k: &str, v: String| out.push((format!("{prefix}.{k}"), v));
    if let Field::Is(v) = c.verb {
        push("verb", vocab.name(v).to_string());
    }
    if let Field::Is(v) = c.transitivity {
        push("transitivity", v.to_string());
    }
    if let Field::Is(v) = c.voice {
        push("voice", v.to_string());
    }
    if let Field::Is(v) = c.tense {
        push("tense", v.to_string());
    }
    if let Field::Is(v) = c.aspect {
        push("aspect", v.to_string());
    }
    if let Field::Is(v) = c.polarity {
        push("polarity", v.to_string());
    }
    if let Field::Is(advs) = &c.adverbs {
        let text = if advs.is_empty() {
            "-".to_string()
        } else {
            advs.iter().map(|a| vocab.name(*a)).collect::<Vec<_>>().join(",")
        };
        push("adverbs", text);
    }
    if let Field::Is(v) = c.agent.noun {
        push("agent.noun", vocab.name(v).to_string());
    }
    if let Field::Is(v) = c.agent.number {
        push("agent.number", v.to_string());
    }
    match &c.patient {
        Presence::Any => {}
        Presence::Absent => push("patient", "none".to_string()),
        Presence::Present(p) => {
            push("patient", "present".to_string());
            if let Field::Is(v) = p.noun {
                push("patient.noun", vocab.name(v).to_string());
            }
            if let Field::Is(v) = p.number {
                push("patient.number", v.to_string());
            }
        }
    }
}
