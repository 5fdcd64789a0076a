use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{LemmaId, Transitivity, UnknownKeyword};

/// The default 14-lemma probe vocabulary (7 human nouns, 7 verbs) plus ten adverbs.
pub const DEFAULT_VOCABULARY: &str = include_str!("../../data/vocabulary.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartOfSpeech {
    Noun,
    Verb,
    Adverb,
}

impl PartOfSpeech {
    pub fn as_str(self) -> &'static str {
        match self {
            PartOfSpeech::Noun => "noun",
            PartOfSpeech::Verb => "verb",
            PartOfSpeech::Adverb => "adverb",
        }
    }
}

impl fmt::Display for PartOfSpeech {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PartOfSpeech {
    type Err = UnknownKeyword;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "noun" => Ok(PartOfSpeech::Noun),
            "verb" => Ok(PartOfSpeech::Verb),
            "adverb" => Ok(PartOfSpeech::Adverb),
            _ => Err(UnknownKeyword { kind: "part of speech", value: s.to_string() }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LemmaEntry {
    pub name: String,
    pub pos: PartOfSpeech,
    /// Verb transitivity class; `None` for nouns and adverbs.
    pub transitivity: Option<Transitivity>,
    /// Inflected forms in paradigm order (see the vocabulary file header).
    pub forms: Vec<String>,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum VocabularyError {
    #[error("line {line}: expected `lemma pos class forms...`")]
    MalformedLine { line: usize },
    #[error("line {line}: {source}")]
    Keyword { line: usize, source: UnknownKeyword },
    #[error("line {line}: noun `{lemma}` is not in the animate-human class (found `{class}`)")]
    NotHuman { line: usize, lemma: String, class: String },
    #[error("line {line}: duplicate lemma `{lemma}`")]
    Duplicate { line: usize, lemma: String },
    #[error("too many lemmas for a 16-bit lemma index")]
    TooLarge,
}

/// Lemma inventory with part-of-speech, transitivity class and inflections.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(into = "Vec<LemmaEntry>", try_from = "Vec<LemmaEntry>")]
pub struct Vocabulary {
    entries: Vec<LemmaEntry>,
    by_name: HashMap<String, LemmaId>,
}

impl PartialEq for Vocabulary {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries
    }
}

impl Eq for Vocabulary {}

impl From<Vocabulary> for Vec<LemmaEntry> {
    fn from(v: Vocabulary) -> Self {
        v.entries
    }
}

impl TryFrom<Vec<LemmaEntry>> for Vocabulary {
    type Error = VocabularyError;

    fn try_from(entries: Vec<LemmaEntry>) -> Result<Self, Self::Error> {
        Vocabulary::new(entries)
    }
}

impl Vocabulary {
    pub fn new(entries: Vec<LemmaEntry>) -> Result<Self, VocabularyError> {
        if entries.len() > u16::MAX as usize {
            return Err(VocabularyError::TooLarge);
        }
        let mut by_name = HashMap::new();
        for (i, e) in entries.iter().enumerate() {
            if by_name.insert(e.name.clone(), LemmaId(i as u16)).is_some() {
                return Err(VocabularyError::Duplicate { line: i + 1, lemma: e.name.clone() });
            }
        }
        Ok(Vocabulary { entries, by_name })
    }

    /// The shipped default vocabulary.
    pub fn default_english() -> Self {
        Self::parse(DEFAULT_VOCABULARY).expect("embedded vocabulary parses")
    }

    /// Parses the line-oriented vocabulary format. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, VocabularyError> {
        let mut entries: Vec<LemmaEntry> = Vec::new();
        let mut seen = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let cols: Vec<&str> = content.split_whitespace().collect();
            if cols.len() < 3 {
                return Err(VocabularyError::MalformedLine { line });
            }
            let pos: PartOfSpeech = cols[1].parse().map_err(|source| VocabularyError::Keyword { line, source })?;
            let transitivity = match pos {
                PartOfSpeech::Verb => {
                    Some(cols[2].parse::<Transitivity>().map_err(|source| VocabularyError::Keyword { line, source })?)
                }
                PartOfSpeech::Noun => {
                    if cols[2] != "human" {
                        return Err(VocabularyError::NotHuman {
                            line,
                            lemma: cols[0].to_string(),
                            class: cols[2].to_string(),
                        });
                    }
                    None
                }
                PartOfSpeech::Adverb => None,
            };
            if seen.insert(cols[0].to_string(), line).is_some() {
                return Err(VocabularyError::Duplicate { line, lemma: cols[0].to_string() });
            }
            entries.push(LemmaEntry {
                name: cols[0].to_string(),
                pos,
                transitivity,
                forms: cols[3..].iter().map(|s| s.to_string()).collect(),
            });
        }
        Self::new(entries)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let class = match (e.pos, e.transitivity) {
                (PartOfSpeech::Verb, Some(t)) => t.as_str(),
                (PartOfSpeech::Noun, _) => "human",
                _ => "-",
            };
            out.push_str(&format!("{} {} {} {}\n", e.name, e.pos, class, e.forms.join(" ")));
        }
        out
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, id: LemmaId) -> Option<&LemmaEntry> {
        self.entries.get(id.index())
    }

    pub fn name(&self, id: LemmaId) -> &str {
        self.entries.get(id.index()).map(|e| e.name.as_str()).unwrap_or("?")
    }

    pub fn lookup(&self, name: &str) -> Option<LemmaId> {
        self.by_name.get(name).copied()
    }

    /// Looks up a lemma, panicking when absent. For tests and fixed fixtures.
    pub fn id(&self, name: &str) -> LemmaId {
        self.lookup(name).unwrap_or_else(|| panic!("lemma `{name}` not in vocabulary"))
    }

    pub fn pos(&self, id: LemmaId) -> Option<PartOfSpeech> {
        self.entry(id).map(|e| e.pos)
    }

    pub fn ids(&self) -> impl Iterator<Item = LemmaId> + '_ {
        (0..self.entries.len()).map(|i| LemmaId(i as u16))
    }

    fn with_pos(&self, pos: PartOfSpeech) -> Vec<LemmaId> {
        self.ids().filter(|id| self.pos(*id) == Some(pos)).collect()
    }

    pub fn nouns(&self) -> Vec<LemmaId> {
        self.with_pos(PartOfSpeech::Noun)
    }

    pub fn verbs(&self) -> Vec<LemmaId> {
        self.with_pos(PartOfSpeech::Verb)
    }

    pub fn adverbs(&self) -> Vec<LemmaId> {
        self.with_pos(PartOfSpeech::Adverb)
    }

    pub fn verbs_with(&self, transitivity: Transitivity) -> Vec<LemmaId> {
        self.ids()
            .filter(|id| self.entry(*id).and_then(|e| e.transitivity) == Some(transitivity))
            .collect()
    }

    pub fn transitivity(&self, verb: LemmaId) -> Option<Transitivity> {
        self.entry(verb).and_then(|e| e.transitivity)
    }

    /// Probe lemma inventory: nouns then verbs, in vocabulary order.
    pub fn probe_lemmas(&self) -> Vec<LemmaId> {
        let mut out = self.nouns();
        out.extend(self.verbs());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_vocabulary_has_fourteen_probe_lemmas() {
        let v = Vocabulary::default_english();
        assert_eq!(v.nouns().len(), 7);
        assert_eq!(v.verbs().len(), 7);
        assert_eq!(v.probe_lemmas().len(), 14);
        assert_eq!(v.adverbs().len(), 10);
        assert_eq!(v.verbs_with(Transitivity::Intransitive).len(), 2);
    }

    #[test]
    fn text_round_trip() {
        let v = Vocabulary::default_english();
        let again = Vocabulary::parse(&v.to_text()).unwrap();
        assert_eq!(v, again);
    }

    #[test]
    fn rejects_inanimate_noun() {
        let err = Vocabulary::parse("rock noun thing rock rocks\n").unwrap_err();
        assert!(matches!(err, VocabularyError::NotHuman { line: 1, .. }));
    }

    #[test]
    fn rejects_duplicate_and_malformed() {
        let err = Vocabulary::parse("man noun human man men\nman noun human man men\n").unwrap_err();
        assert!(matches!(err, VocabularyError::Duplicate { line: 2, .. }));
        assert!(matches!(Vocabulary::parse("man noun\n"), Err(VocabularyError::MalformedLine { line: 1 })));
        assert!(matches!(Vocabulary::parse("run verb sometimes run\n"), Err(VocabularyError::Keyword { .. })));
    }
}
