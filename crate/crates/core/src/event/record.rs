//! One-line text records for fully populated events: `id=N` followed by
//! `key=value` pairs in the key-path order of [`PartialEvent::key_values`].

use super::{EventRepresentation, KeyPathError, PartialEvent, Vocabulary};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RecordError {
    #[error("record is missing `id=`")]
    MissingId,
    #[error("malformed field `{0}`")]
    Malformed(String),
    #[error(transparent)]
    KeyPath(#[from] KeyPathError),
    #[error("record does not describe a fully populated event")]
    Incomplete,
}

pub fn write_event_record(event: &EventRepresentation, vocab: &Vocabulary) -> String {
    let mut out = format!("id={}", event.id);
    for (k, v) in PartialEvent::from_event(event).key_values(vocab) {
        out.push(' ');
        out.push_str(&k);
        out.push('=');
        out.push_str(&v);
    }
    out
}

pub fn parse_event_record(line: &str, vocab: &Vocabulary) -> Result<EventRepresentation, RecordError> {
    let mut fields = line.split_whitespace();
    let id = fields
        .next()
        .and_then(|f| f.strip_prefix("id="))
        .ok_or(RecordError::MissingId)?
        .parse::<u64>()
        .map_err(|_| RecordError::MissingId)?;
    let mut partial = PartialEvent::wildcard();
    for field in fields {
        let (k, v) = field.split_once('=').ok_or_else(|| RecordError::Malformed(field.to_string()))?;
        partial.set(k, v, vocab)?;
    }
    partial.to_event(id).ok_or(RecordError::Incomplete)
}
