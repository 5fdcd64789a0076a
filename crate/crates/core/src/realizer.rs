//! Rule-based surface realization with inflection and agreement.
//!
//! Word order: active `the AGENT VG (the PATIENT)`, passive
//! `the PATIENT VG by the AGENT`. A relative clause follows its head noun as
//! `that` plus the clause minus the gapped argument. Tokens are lowercase and
//! unpunctuated.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::event::{
    validate_event, ArgumentSlot, Aspect, ClauseFrame, ClauseSite, EventRepresentation, Gap, LemmaId, Number,
    PartOfSpeech, Polarity, Role, SyntacticFeatures, Tense, Vocabulary, Voice,
};

pub const RELATIVIZER: &str = "that";
pub const DETERMINER: &str = "the";
pub const NEGATION: &str = "not";
pub const PASSIVE_BY: &str = "by";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerbForm {
    Base,
    ThirdSingular,
    Past,
    PastParticiple,
    PresentParticiple,
}

impl VerbForm {
    fn slot(self) -> usize {
        self as usize
    }
}

/// Inflection key for [`InflectionLexicon::inflect`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Inflection {
    Noun(Number),
    Verb(VerbForm),
    Adverb,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RealizeError {
    #[error("lemma `{lemma}` lacks a complete {pos} paradigm")]
    MissingParadigm { lemma: String, pos: PartOfSpeech },
    #[error("form `{form}` is shared by `{first}` and `{second}`")]
    AmbiguousForm { form: String, first: String, second: String },
    #[error("lemma id {0} is not in the lexicon")]
    UnknownLemma(u16),
    #[error("{lemma} cannot be inflected as {requested:?}")]
    WrongInflection { lemma: String, requested: Inflection },
    #[error("invalid event {id}: {verdict}")]
    InvalidEvent { id: u64, verdict: String },
}

/// Complete paradigms for every vocabulary lemma.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InflectionLexicon {
    names: Vec<String>,
    paradigms: Vec<(PartOfSpeech, Vec<String>)>,
    reverse: HashMap<String, LemmaId>,
}

impl InflectionLexicon {
    pub fn new(vocab: &Vocabulary) -> Result<Self, RealizeError> {
        let mut names = Vec::new();
        let mut paradigms = Vec::new();
        let mut reverse: HashMap<String, LemmaId> = HashMap::new();
        for id in vocab.ids() {
            let entry = vocab.entry(id).expect("id from vocabulary");
            let expected = match entry.pos {
                PartOfSpeech::Noun => 2,
                PartOfSpeech::Verb => 5,
                PartOfSpeech::Adverb => 1,
            };
            if entry.forms.len() != expected || entry.forms.iter().any(|f| f.is_empty()) {
                return Err(RealizeError::MissingParadigm { lemma: entry.name.clone(), pos: entry.pos });
            }
            for form in &entry.forms {
                if let Some(prev) = reverse.insert(form.clone(), id) {
                    if prev != id {
                        return Err(RealizeError::AmbiguousForm {
                            form: form.clone(),
                            first: vocab.name(prev).to_string(),
                            second: entry.name.clone(),
                        });
                    }
                }
            }
            names.push(entry.name.clone());
            paradigms.push((entry.pos, entry.forms.clone()));
        }
        Ok(InflectionLexicon { names, paradigms, reverse })
    }

    pub fn inflect(&self, lemma: LemmaId, inflection: Inflection) -> Result<&str, RealizeError> {
        let (pos, forms) = self.paradigms.get(lemma.index()).ok_or(RealizeError::UnknownLemma(lemma.0))?;
        let slot = match (pos, inflection) {
            (PartOfSpeech::Noun, Inflection::Noun(Number::Singular)) => 0,
            (PartOfSpeech::Noun, Inflection::Noun(Number::Plural)) => 1,
            (PartOfSpeech::Verb, Inflection::Verb(f)) => f.slot(),
            (PartOfSpeech::Adverb, Inflection::Adverb) => 0,
            _ => {
                return Err(RealizeError::WrongInflection {
                    lemma: self.names[lemma.index()].clone(),
                    requested: inflection,
                })
            }
        };
        Ok(&forms[slot])
    }

    /// Lemma whose paradigm contains `form`.
    pub fn lemma_of(&self, form: &str) -> Option<LemmaId> {
        self.reverse.get(form).copied()
    }

    /// All forms of `lemma`.
    pub fn forms(&self, lemma: LemmaId) -> &[String] {
        &self.paradigms[lemma.index()].1
    }
}

fn be_form(tense: Tense, number: Number) -> &'static str {
    match (tense, number) {
        (Tense::Present, Number::Singular) => "is",
        (Tense::Present, Number::Plural) => "are",
        (Tense::Past, Number::Singular) => "was",
        (Tense::Past, Number::Plural) => "were",
    }
}

fn do_form(tense: Tense, number: Number) -> &'static str {
    match (tense, number) {
        (Tense::Present, Number::Singular) => "does",
        (Tense::Present, Number::Plural) => "do",
        (Tense::Past, _) => "did",
    }
}

/// Auxiliaries (with negation) preceding the main verb.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuxiliaryChain {
    pub auxiliaries: Vec<&'static str>,
    /// Index into `auxiliaries` where adverbs are inserted.
    pub adverb_slot: usize,
    pub verb_form: VerbForm,
}

pub fn auxiliary_chain(features: &SyntacticFeatures, subject_number: Number) -> AuxiliaryChain {
    let tense = features.tense;
    let negative = features.polarity == Polarity::Negative;
    let (mut auxiliaries, verb_form) = match (features.voice, features.aspect) {
        (Voice::Active, Aspect::Simple) if !negative => {
            let form = match (tense, subject_number) {
                (Tense::Present, Number::Singular) => VerbForm::ThirdSingular,
                (Tense::Present, Number::Plural) => VerbForm::Base,
                (Tense::Past, _) => VerbForm::Past,
            };
            (Vec::new(), form)
        }
        (Voice::Active, Aspect::Simple) => (vec![do_form(tense, subject_number)], VerbForm::Base),
        (Voice::Active, Aspect::Progressive) => (vec![be_form(tense, subject_number)], VerbForm::PresentParticiple),
        (Voice::Passive, Aspect::Simple) => (vec![be_form(tense, subject_number)], VerbForm::PastParticiple),
        (Voice::Passive, Aspect::Progressive) => {
            (vec![be_form(tense, subject_number), "being"], VerbForm::PastParticiple)
        }
    };
    if negative {
        auxiliaries.insert(1, NEGATION);
    }
    let adverb_slot = match auxiliaries.len() {
        0 => 0,
        _ if negative => 2,
        _ => 1,
    };
    AuxiliaryChain { auxiliaries, adverb_slot, verb_form }
}

/// Which part of its clause a token realizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "role")]
pub enum TokenPart {
    Determiner(Role),
    Noun(Role),
    Relativizer,
    Auxiliary,
    Negation,
    Adverb,
    Verb,
    By,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenAlignment {
    pub site: ClauseSite,
    pub part: TokenPart,
    /// Lemma realized by the token, for content words.
    pub lemma: Option<LemmaId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    Agent,
    Patient,
    Unrelated,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleRelation {
    pub noun: LemmaId,
    pub verb: LemmaId,
    pub relation: Relation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerbPolarity {
    pub verb: LemmaId,
    pub polarity: Polarity,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LemmaPositions {
    pub lemma: LemmaId,
    pub positions: Vec<usize>,
}

/// Gold annotations derived from the event graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldLabels {
    pub relations: Vec<RoleRelation>,
    pub polarity: Vec<VerbPolarity>,
    pub positions: Vec<LemmaPositions>,
}

impl GoldLabels {
    /// Relation of `noun` to `verb`; `None` when either is absent from the event.
    pub fn relation(&self, noun: LemmaId, verb: LemmaId) -> Option<Relation> {
        self.relations.iter().find(|r| r.noun == noun && r.verb == verb).map(|r| r.relation)
    }

    pub fn polarity_of(&self, verb: LemmaId) -> Option<Polarity> {
        self.polarity.iter().find(|p| p.verb == verb).map(|p| p.polarity)
    }

    /// Token positions of `lemma` (empty when it does not occur).
    pub fn positions_of(&self, lemma: LemmaId) -> &[usize] {
        self.positions.iter().find(|p| p.lemma == lemma).map(|p| p.positions.as_slice()).unwrap_or(&[])
    }

    pub fn contains(&self, lemma: LemmaId) -> bool {
        !self.positions_of(lemma).is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedSentence {
    pub id: u64,
    pub tokens: Vec<String>,
    pub event: EventRepresentation,
    pub alignment: Vec<TokenAlignment>,
    pub gold: GoldLabels,
}

impl AnnotatedSentence {
    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }
}

/// Role relations and polarities from the event graph alone.
pub fn gold_labels(event: &EventRepresentation) -> (Vec<RoleRelation>, Vec<VerbPolarity>) {
    let nouns = event.nouns();
    let mut relations = Vec::new();
    let mut polarity = Vec::new();
    for (_, frame) in event.clauses() {
        polarity.push(VerbPolarity { verb: frame.verb, polarity: frame.features.polarity });
        for &noun in &nouns {
            let relation = if frame.agent.noun == noun {
                Relation::Agent
            } else if frame.patient.as_ref().is_some_and(|p| p.noun == noun) {
                Relation::Patient
            } else {
                Relation::Unrelated
            };
            relations.push(RoleRelation { noun, verb: frame.verb, relation });
        }
    }
    (relations, polarity)
}

/// Realizes events against a fixed vocabulary.
#[derive(Debug, Clone)]
pub struct Realizer {
    vocab: Vocabulary,
    lexicon: InflectionLexicon,
}

struct Builder<'a> {
    lexicon: &'a InflectionLexicon,
    tokens: Vec<String>,
    alignment: Vec<TokenAlignment>,
}

impl Builder<'_> {
    fn push(&mut self, token: &str, site: ClauseSite, part: TokenPart, lemma: Option<LemmaId>) {
        self.tokens.push(token.to_string());
        self.alignment.push(TokenAlignment { site, part, lemma });
    }

    fn noun_phrase(&mut self, slot: &ArgumentSlot, site: ClauseSite) -> Result<(), RealizeError> {
        self.push(DETERMINER, site, TokenPart::Determiner(slot.role), None);
        let form = self.lexicon.inflect(slot.noun, Inflection::Noun(slot.number))?;
        self.push(form, site, TokenPart::Noun(slot.role), Some(slot.noun));
        if let Some(rc) = &slot.relative_clause {
            let rc_site = match site {
                ClauseSite::Main if slot.role == Role::Agent => ClauseSite::AgentRelative,
                ClauseSite::Main => ClauseSite::PatientRelative,
                other => other,
            };
            self.push(RELATIVIZER, rc_site, TokenPart::Relativizer, None);
            self.clause(&rc.frame, rc_site, Some(rc.gap))?;
        }
        Ok(())
    }

    fn verb_group(&mut self, frame: &ClauseFrame, site: ClauseSite) -> Result<(), RealizeError> {
        let chain = auxiliary_chain(&frame.features, frame.surface_subject().number);
        for (i, aux) in chain.auxiliaries.iter().enumerate() {
            if i == chain.adverb_slot {
                self.adverbs(frame, site)?;
            }
            let part = if *aux == NEGATION { TokenPart::Negation } else { TokenPart::Auxiliary };
            self.push(aux, site, part, None);
        }
        if chain.adverb_slot == chain.auxiliaries.len() {
            self.adverbs(frame, site)?;
        }
        let form = self.lexicon.inflect(frame.verb, Inflection::Verb(chain.verb_form))?;
        self.push(form, site, TokenPart::Verb, Some(frame.verb));
        Ok(())
    }

    fn adverbs(&mut self, frame: &ClauseFrame, site: ClauseSite) -> Result<(), RealizeError> {
        for adv in &frame.features.adverbs {
            let form = self.lexicon.inflect(*adv, Inflection::Adverb)?;
            self.push(form, site, TokenPart::Adverb, Some(*adv));
        }
        Ok(())
    }

    /// A clause; `gap` omits the gapped argument of a relative clause.
    fn clause(&mut self, frame: &ClauseFrame, site: ClauseSite, gap: Option<Gap>) -> Result<(), RealizeError> {
        let passive = frame.features.voice == Voice::Passive;
        match gap {
            Some(Gap::Object) => {
                self.noun_phrase(&frame.agent, site)?;
                self.verb_group(frame, site)?;
            }
            _ => {
                if gap.is_none() {
                    self.noun_phrase(frame.surface_subject(), site)?;
                }
                self.verb_group(frame, site)?;
                match (&frame.patient, passive) {
                    (Some(_), true) => {
                        self.push(PASSIVE_BY, site, TokenPart::By, None);
                        self.noun_phrase(&frame.agent, site)?;
                    }
                    (Some(patient), false) => self.noun_phrase(patient, site)?,
                    (None, _) => {}
                }
            }
        }
        Ok(())
    }
}

impl Realizer {
    pub fn new(vocab: &Vocabulary) -> Result<Self, RealizeError> {
        Ok(Realizer { vocab: vocab.clone(), lexicon: InflectionLexicon::new(vocab)? })
    }

    pub fn lexicon(&self) -> &InflectionLexicon {
        &self.lexicon
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn realize(&self, event: &EventRepresentation) -> Result<AnnotatedSentence, RealizeError> {
        let verdict = validate_event(event, &self.vocab);
        if !verdict.is_ok() {
            return Err(RealizeError::InvalidEvent { id: event.id, verdict: verdict.to_string() });
        }
        let mut b = Builder { lexicon: &self.lexicon, tokens: Vec::new(), alignment: Vec::new() };
        b.clause(&event.main, ClauseSite::Main, None)?;
        let (relations, polarity) = gold_labels(event);
        let mut positions: Vec<LemmaPositions> = Vec::new();
        for (i, a) in b.alignment.iter().enumerate() {
            let Some(lemma) = a.lemma else { continue };
            match positions.iter_mut().find(|p| p.lemma == lemma) {
                Some(p) => p.positions.push(i),
                None => positions.push(LemmaPositions { lemma, positions: vec![i] }),
            }
        }
        positions.sort_by_key(|p| p.lemma);
        Ok(AnnotatedSentence {
            id: event.id,
            tokens: b.tokens,
            event: event.clone(),
            alignment: b.alignment,
            gold: GoldLabels { relations, polarity, positions },
        })
    }

    pub fn realize_all(&self, events: &[EventRepresentation]) -> Result<Vec<AnnotatedSentence>, RealizeError> {
        events.iter().map(|e| self.realize(e)).collect()
    }
}

/// One JSON record per line.
pub fn sentences_to_jsonl(sentences: &[AnnotatedSentence]) -> String {
    let mut out = String::new();
    for s in sentences {
        out.push_str(&serde_json::to_string(s).expect("sentence serializes"));
        out.push('\n');
    }
    out
}

pub fn sentences_from_jsonl(text: &str) -> Result<Vec<AnnotatedSentence>, serde_json::Error> {
    text.lines().filter(|l| !l.trim().is_empty()).map(serde_json::from_str).collect()
}

/// Plain text, one sentence per line.
pub fn export_text(sentences: &[AnnotatedSentence]) -> String {
    let mut out = String::new();
    for s in sentences {
        out.push_str(&s.text());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn feats(voice: Voice, tense: Tense, aspect: Aspect, polarity: Polarity) -> SyntacticFeatures {
        SyntacticFeatures { voice, tense, aspect, polarity, adverbs: Vec::new() }
    }

    fn chain_text(c: &AuxiliaryChain) -> String {
        c.auxiliaries.join(" ")
    }

    #[test]
    fn inflects_attested_forms() {
        let v = Vocabulary::default_english();
        let lex = InflectionLexicon::new(&v).unwrap();
        assert_eq!(lex.inflect(v.id("man"), Inflection::Noun(Number::Plural)).unwrap(), "men");
        assert_eq!(lex.inflect(v.id("sleep"), Inflection::Verb(VerbForm::PresentParticiple)).unwrap(), "sleeping");
        assert_eq!(lex.inflect(v.id("help"), Inflection::Verb(VerbForm::PastParticiple)).unwrap(), "helped");
        assert!(lex.inflect(v.id("help"), Inflection::Noun(Number::Plural)).is_err());
    }

    #[test]
    fn missing_paradigm_is_rejected() {
        let v = Vocabulary::parse("walk verb intransitive walk walks walked\n").unwrap();
        assert!(matches!(InflectionLexicon::new(&v), Err(RealizeError::MissingParadigm { .. })));
    }

    #[test]
    fn auxiliary_chains() {
        use Aspect::*;
        use Polarity::*;
        use Tense::*;
        use Voice::*;
        let c = auxiliary_chain(&feats(Passive, Past, Simple, Negative), Number::Singular);
        assert_eq!((chain_text(&c).as_str(), c.verb_form), ("was not", VerbForm::PastParticiple));
        let c = auxiliary_chain(&feats(Passive, Present, Progressive, Positive), Number::Plural);
        assert_eq!((chain_text(&c).as_str(), c.verb_form), ("are being", VerbForm::PastParticiple));
        let c = auxiliary_chain(&feats(Active, Past, Simple, Negative), Number::Singular);
        assert_eq!((chain_text(&c).as_str(), c.verb_form), ("did not", VerbForm::Base));
        let c = auxiliary_chain(&feats(Active, Present, Simple, Positive), Number::Singular);
        assert_eq!((c.auxiliaries.len(), c.verb_form), (0, VerbForm::ThirdSingular));
    }
}
