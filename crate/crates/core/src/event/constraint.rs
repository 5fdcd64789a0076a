//! Required/prohibited event content and its declarative text format.
//!
//! ```text
//! # comments start with '#'
//! require {
//!     main.verb = help
//!     main.voice = passive
//!     lexemes = professor
//! }
//! prohibit {
//!     main.polarity = negative
//! }
//! prohibit {
//!     lexemes = dance, sleep
//! }
//! ```
//!
//! Each `prohibit` block with key paths adds one prohibited partial event;
//! `lexemes` lines add to the required or prohibited lemma sets.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{EventRepresentation, KeyPathError, LemmaId, PartialEvent, Vocabulary};

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Constraint {
    pub required: PartialEvent,
    pub prohibited: Vec<PartialEvent>,
    pub required_lexemes: BTreeSet<LemmaId>,
    pub prohibited_lexemes: BTreeSet<LemmaId>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConstraintParseError {
    #[error("line {line}: {source}")]
    KeyPath { line: usize, source: KeyPathError },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
}

/// True iff `event` unifies with the required partial, with no prohibited
/// partial, contains every required lexeme and no prohibited one.
pub fn match_constraint(event: &EventRepresentation, constraint: &Constraint) -> bool {
    constraint.matches(event)
}

impl Constraint {
    /// The vacuous constraint.
    pub fn any() -> Self {
        Self::default()
    }

    pub fn requiring(partial: PartialEvent) -> Self {
        Constraint { required: partial, ..Self::default() }
    }

    pub fn prohibit(mut self, partial: PartialEvent) -> Self {
        self.prohibited.push(partial);
        self
    }

    pub fn matches(&self, event: &EventRepresentation) -> bool {
        if !self.required.matches(event) || self.prohibited.iter().any(|p| p.matches(event)) {
            return false;
        }
        if self.required_lexemes.is_empty() && self.prohibited_lexemes.is_empty() {
            return true;
        }
        let lemmas = event.lemmas();
        self.required_lexemes.iter().all(|l| lemmas.contains(l))
            && !self.prohibited_lexemes.iter().any(|l| lemmas.contains(l))
    }

    pub fn parse(text: &str, vocab: &Vocabulary) -> Result<Self, ConstraintParseError> {
        #[derive(PartialEq)]
        enum Block {
            Top,
            Require,
            Prohibit,
        }
        let mut out = Constraint::any();
        let mut block = Block::Top;
        let mut current = PartialEvent::wildcard();
        let mut touched = false;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let syntax = |message: &str| ConstraintParseError::Syntax { line, message: message.to_string() };
            match content {
                "require {" | "require{" if block == Block::Top => {
                    block = Block::Require;
                    current = out.required.clone();
                    continue;
                }
                "prohibit {" | "prohibit{" if block == Block::Top => {
                    block = Block::Prohibit;
                    current = PartialEvent::wildcard();
                    touched = false;
                    continue;
                }
                "}" => {
                    match block {
                        Block::Top => return Err(syntax("unmatched `}`")),
                        Block::Require => out.required = std::mem::take(&mut current),
                        Block::Prohibit => {
                            if touched {
                                out.prohibited.push(std::mem::take(&mut current));
                            }
                        }
                    }
                    block = Block::Top;
                    continue;
                }
                _ => {}
            }
            if block == Block::Top {
                return Err(syntax("expected `require {` or `prohibit {`"));
            }
            let (key, value) = content.split_once('=').ok_or_else(|| syntax("expected `key = value`"))?;
            let (key, value) = (key.trim(), value.trim());
            if key == "lexemes" {
                for name in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    let id = vocab.lookup(name).ok_or_else(|| ConstraintParseError::KeyPath {
                        line,
                        source: KeyPathError::UnknownLemma(name.to_string()),
                    })?;
                    if block == Block::Require {
                        out.required_lexemes.insert(id);
                    } else {
                        out.prohibited_lexemes.insert(id);
                    }
                }
                continue;
            }
            current.set(key, value, vocab).map_err(|source| ConstraintParseError::KeyPath { line, source })?;
            touched = true;
        }
        if block != Block::Top {
            return Err(ConstraintParseError::Syntax { line: text.lines().count(), message: "unclosed block".into() });
        }
        Ok(out)
    }

    /// Conjunction of two constraints. Fails when both require different
    /// values for the same key path.
    pub fn merge(mut self, other: &Constraint, vocab: &Vocabulary) -> Result<Self, KeyPathError> {
        let mine: std::collections::BTreeMap<String, String> = self.required.key_values(vocab).into_iter().collect();
        for (k, v) in other.required.key_values(vocab) {
            match mine.get(&k) {
                Some(existing) if *existing != v => {
                    return Err(KeyPathError::Conflict { key: k, existing: existing.clone(), requested: v })
                }
                Some(_) => {}
                None => self.required.set(&k, &v, vocab)?,
            }
        }
        self.prohibited.extend(other.prohibited.iter().cloned());
        self.required_lexemes.extend(other.required_lexemes.iter().copied());
        self.prohibited_lexemes.extend(other.prohibited_lexemes.iter().copied());
        Ok(self)
    }

    pub fn to_text(&self, vocab: &Vocabulary) -> String {
        let mut out = String::new();
        let names = |set: &BTreeSet<LemmaId>| set.iter().map(|l| vocab.name(*l)).collect::<Vec<_>>().join(", ");
        out.push_str("require {\n");
        for (k, v) in self.required.key_values(vocab) {
            out.push_str(&format!("    {k} = {v}\n"));
        }
        if !self.required_lexemes.is_empty() {
            out.push_str(&format!("    lexemes = {}\n", names(&self.required_lexemes)));
        }
        out.push_str("}\n");
        for p in &self.prohibited {
            out.push_str("prohibit {\n");
            for (k, v) in p.key_values(vocab) {
                out.push_str(&format!("    {k} = {v}\n"));
            }
            out.push_str("}\n");
        }
        if !self.prohibited_lexemes.is_empty() {
            out.push_str(&format!("prohibit {{\n    lexemes = {}\n}}\n", names(&self.prohibited_lexemes)));
        }
        out
    }
}
