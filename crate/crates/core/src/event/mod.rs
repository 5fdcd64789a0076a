//! Event representations: lexicalized case frames with semantic roles and the
//! syntactic features needed to realize them deterministically.
//!
//! An [`EventRepresentation`] is a main [`ClauseFrame`] whose argument slots
//! may carry at most one relative clause. Partially specified events
//! ([`PartialEvent`]) share the same shape with a wildcard per field and drive
//! both generation and constraint matching.

mod constraint;
mod partial;
mod record;
mod template;
mod validate;
mod vocab;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use constraint::{match_constraint, Constraint, ConstraintParseError};
pub use partial::{Field, KeyPathError, PartialArg, PartialClause, PartialEvent, PartialRelative, Presence};
pub use record::{parse_event_record, write_event_record, RecordError};
pub use template::{enumerate_templates, RcShape, RcSite, StructuralTemplate, TemplateLimits};
pub use validate::{validate_event, Verdict, Violation};
pub use vocab::{LemmaEntry, PartOfSpeech, Vocabulary, VocabularyError, DEFAULT_VOCABULARY};

/// Error returned when a keyword does not name any variant of a feature enum.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown {kind} `{value}`")]
pub struct UnknownKeyword {
    pub kind: &'static str,
    pub value: String,
}

macro_rules! keyword_enum {
    ($(#[$meta:meta])* $name:ident, $kind:literal { $($variant:ident => $word:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(rename_all = "lowercase")]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            /// Every variant in declaration order.
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $word),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = UnknownKeyword;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($word => Ok($name::$variant),)+
                    _ => Err(UnknownKeyword { kind: $kind, value: s.to_string() }),
                }
            }
        }
    };
}

keyword_enum!(Transitivity, "transitivity" { Transitive => "transitive", Intransitive => "intransitive" });
keyword_enum!(Voice, "voice" { Active => "active", Passive => "passive" });
keyword_enum!(Tense, "tense" { Present => "present", Past => "past" });
keyword_enum!(Aspect, "aspect" { Simple => "simple", Progressive => "progressive" });
keyword_enum!(Polarity, "polarity" { Positive => "positive", Negative => "negative" });
keyword_enum!(Number, "number" { Singular => "singular", Plural => "plural" });
keyword_enum!(
    /// Semantic role of an argument. Invariant under voice alternation.
    Role, "role" { Agent => "agent", Patient => "patient" }
);
keyword_enum!(
    /// Which surface argument of a relative clause is gapped by its head noun.
    Gap, "gap" { Subject => "subject", Object => "object" }
);

/// Index of a lemma in a [`Vocabulary`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LemmaId(pub u16);

impl LemmaId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Position of a clause frame inside an event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClauseSite {
    Main,
    AgentRelative,
    PatientRelative,
}

impl ClauseSite {
    pub const ALL: [ClauseSite; 3] = [ClauseSite::Main, ClauseSite::AgentRelative, ClauseSite::PatientRelative];

    /// Key-path prefix used by the text formats.
    pub fn key_prefix(self) -> &'static str {
        match self {
            ClauseSite::Main => "main",
            ClauseSite::AgentRelative => "main.agent.rc",
            ClauseSite::PatientRelative => "main.patient.rc",
        }
    }
}

impl fmt::Display for ClauseSite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key_prefix())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct SyntacticFeatures {
    pub voice: Voice,
    pub tense: Tense,
    pub aspect: Aspect,
    pub polarity: Polarity,
    /// Adverb lemmas in surface order.
    pub adverbs: Vec<LemmaId>,
}

impl Default for Voice {
    fn default() -> Self {
        Voice::Active
    }
}
impl Default for Tense {
    fn default() -> Self {
        Tense::Present
    }
}
impl Default for Aspect {
    fn default() -> Self {
        Aspect::Simple
    }
}
impl Default for Polarity {
    fn default() -> Self {
        Polarity::Positive
    }
}

pub const MAX_ADVERBS: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RelativeClause {
    pub gap: Gap,
    pub frame: Box<ClauseFrame>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ArgumentSlot {
    pub noun: LemmaId,
    pub number: Number,
    pub role: Role,
    pub relative_clause: Option<RelativeClause>,
}

impl ArgumentSlot {
    pub fn new(noun: LemmaId, number: Number, role: Role) -> Self {
        ArgumentSlot { noun, number, role, relative_clause: None }
    }

    pub fn with_relative(mut self, gap: Gap, frame: ClauseFrame) -> Self {
        self.relative_clause = Some(RelativeClause { gap, frame: Box::new(frame) });
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ClauseFrame {
    pub verb: LemmaId,
    pub transitivity: Transitivity,
    pub agent: ArgumentSlot,
    pub patient: Option<ArgumentSlot>,
    pub features: SyntacticFeatures,
}

impl ClauseFrame {
    pub fn intransitive(verb: LemmaId, agent: ArgumentSlot, features: SyntacticFeatures) -> Self {
        ClauseFrame { verb, transitivity: Transitivity::Intransitive, agent, patient: None, features }
    }

    pub fn transitive(
        verb: LemmaId,
        agent: ArgumentSlot,
        patient: ArgumentSlot,
        features: SyntacticFeatures,
    ) -> Self {
        ClauseFrame { verb, transitivity: Transitivity::Transitive, agent, patient: Some(patient), features }
    }

    /// The argument slot realized as surface subject.
    pub fn surface_subject(&self) -> &ArgumentSlot {
        match (self.features.voice, &self.patient) {
            (Voice::Passive, Some(patient)) => patient,
            _ => &self.agent,
        }
    }

    /// Argument slot bearing `role`, if present.
    pub fn slot(&self, role: Role) -> Option<&ArgumentSlot> {
        match role {
            Role::Agent => Some(&self.agent),
            Role::Patient => self.patient.as_ref(),
        }
    }

    /// Role of the argument gapped by a relative clause head, given the gap type.
    pub fn gapped_role(&self, gap: Gap) -> Role {
        match gap {
            Gap::Subject if self.features.voice == Voice::Passive => Role::Patient,
            Gap::Subject => Role::Agent,
            Gap::Object => Role::Patient,
        }
    }
}

/// A fully populated event. Equality and hashing ignore `id`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EventRepresentation {
    pub id: u64,
    pub main: ClauseFrame,
}

impl PartialEq for EventRepresentation {
    fn eq(&self, other: &Self) -> bool {
        self.main == other.main
    }
}

impl Eq for EventRepresentation {}

impl std::hash::Hash for EventRepresentation {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.main.hash(state)
    }
}

impl EventRepresentation {
    pub fn new(id: u64, main: ClauseFrame) -> Self {
        EventRepresentation { id, main }
    }

    /// Frame at `site`, when present.
    pub fn clause(&self, site: ClauseSite) -> Option<&ClauseFrame> {
        match site {
            ClauseSite::Main => Some(&self.main),
            ClauseSite::AgentRelative => self.main.agent.relative_clause.as_ref().map(|rc| rc.frame.as_ref()),
            ClauseSite::PatientRelative => self
                .main
                .patient
                .as_ref()
                .and_then(|p| p.relative_clause.as_ref())
                .map(|rc| rc.frame.as_ref()),
        }
    }

    pub fn relative(&self, site: ClauseSite) -> Option<&RelativeClause> {
        match site {
            ClauseSite::Main => None,
            ClauseSite::AgentRelative => self.main.agent.relative_clause.as_ref(),
            ClauseSite::PatientRelative => self.main.patient.as_ref().and_then(|p| p.relative_clause.as_ref()),
        }
    }

    /// Present clause frames in site order.
    pub fn clauses(&self) -> impl Iterator<Item = (ClauseSite, &ClauseFrame)> {
        ClauseSite::ALL.into_iter().filter_map(move |site| self.clause(site).map(|c| (site, c)))
    }

    pub fn verbs(&self) -> Vec<LemmaId> {
        self.clauses().map(|(_, c)| c.verb).collect()
    }

    /// Noun lemmas of every argument mention, including gapped ones.
    pub fn nouns(&self) -> Vec<LemmaId> {
        let mut out = Vec::new();
        for (_, c) in self.clauses() {
            out.push(c.agent.noun);
            if let Some(p) = &c.patient {
                out.push(p.noun);
            }
        }
        out.sort();
        out.dedup();
        out
    }

    /// Every lemma the event mentions: verbs, nouns and adverbs.
    pub fn lemmas(&self) -> std::collections::BTreeSet<LemmaId> {
        let mut out: std::collections::BTreeSet<LemmaId> = self.nouns().into_iter().collect();
        for (_, c) in self.clauses() {
            out.insert(c.verb);
            out.extend(c.features.adverbs.iter().copied());
        }
        out
    }

    pub fn relative_clause_count(&self) -> usize {
        ClauseSite::ALL.iter().filter(|s| self.relative(**s).is_some()).count()
    }

    /// Applies `f` to every noun lemma in the event, gapped positions included.
    pub fn map_nouns(&self, mut f: impl FnMut(LemmaId) -> LemmaId) -> EventRepresentation {
        fn map_frame(frame: &mut ClauseFrame, f: &mut dyn FnMut(LemmaId) -> LemmaId) {
            map_slot(&mut frame.agent, f);
            if let Some(p) = frame.patient.as_mut() {
                map_slot(p, f);
            }
        }
        fn map_slot(slot: &mut ArgumentSlot, f: &mut dyn FnMut(LemmaId) -> LemmaId) {
            slot.noun = f(slot.noun);
            if let Some(rc) = slot.relative_clause.as_mut() {
                map_frame(&mut rc.frame, f);
            }
        }
        let mut out = self.clone();
        map_frame(&mut out.main, &mut f);
        out
    }

    /// Mutable access to the frame at `site`.
    pub fn clause_mut(&mut self, site: ClauseSite) -> Option<&mut ClauseFrame> {
        match site {
            ClauseSite::Main => Some(&mut self.main),
            ClauseSite::AgentRelative => self.main.agent.relative_clause.as_mut().map(|rc| rc.frame.as_mut()),
            ClauseSite::PatientRelative => self
                .main
                .patient
                .as_mut()
                .and_then(|p| p.relative_clause.as_mut())
                .map(|rc| rc.frame.as_mut()),
        }
    }
}
