//! Sentence encoders: mean-pooled skip-gram vectors (BOW), a denoising GRU
//! sequence autoencoder, seeded random vectors, and a plain-text embedding
//! file format for vectors produced elsewhere.

mod autoencoder;
mod skipgram;

use std::collections::HashMap;
use std::fmt::Write as _;

use ndarray::{Array1, Array2, ArrayView1};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::hashing::derive_seed;
use crate::Scalar;

pub use autoencoder::{
    add_noise, seq_encode, seq_encode_all, train_seq_autoencoder, Batch, AutoencoderConfig, AutoencoderReport, CurveRow, SeqAutoencoder,
    BOS, EOS,
};
pub use skipgram::{sgns_pair_loss_and_grad, train_skipgram, SkipGramConfig, SkipGramReport};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EncoderError {
    #[error("token `{0}` is out of vocabulary")]
    OutOfVocabulary(String),
    #[error("forms below the count threshold {min_count}: {forms:?}")]
    UndertrainedVocabulary { min_count: usize, forms: Vec<String> },
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("training diverged at epoch {epoch}: {reason}")]
    Divergence { epoch: usize, reason: String },
    #[error("empty token sequence")]
    EmptySequence,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EmbeddingFileError {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("line {line}: expected {expected} values, found {found}")]
    DimensionMismatch { line: usize, expected: usize, found: usize },
    #[error("line {line}: duplicate id `{id}`")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: bad value `{value}`")]
    BadValue { line: usize, value: String },
}

/// Word vectors indexed by surface form.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable<F: Scalar> {
    forms: Vec<String>,
    index: HashMap<String, usize>,
    pub vectors: Array2<F>,
}

impl<F: Scalar> EmbeddingTable<F> {
    pub fn new(forms: Vec<String>, vectors: Array2<F>) -> Self {
        assert_eq!(forms.len(), vectors.nrows(), "one row per form");
        let index = forms.iter().enumerate().map(|(i, f)| (f.clone(), i)).collect();
        EmbeddingTable { forms, index, vectors }
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn len(&self) -> usize {
        self.forms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forms.is_empty()
    }

    pub fn forms(&self) -> &[String] {
        &self.forms
    }

    pub fn index_of(&self, form: &str) -> Option<usize> {
        self.index.get(form).copied()
    }

    pub fn get(&self, form: &str) -> Option<ArrayView1<'_, F>> {
        self.index_of(form).map(|i| self.vectors.row(i))
    }

    pub fn to_text(&self) -> String {
        write_rows(self.forms.iter().map(String::as_str).zip(self.vectors.rows()), self.len(), self.dim())
    }

    pub fn from_text(text: &str) -> Result<Self, EmbeddingFileError> {
        let (keys, vectors) = read_rows(text, |k| Some(k.to_string()))?;
        Ok(EmbeddingTable::new(keys, vectors))
    }
}

/// Fixed-width sentence encodings keyed by sentence id.
#[derive(Debug, Clone, PartialEq)]
pub struct SentenceVectors<F: Scalar> {
    pub tag: String,
    ids: Vec<u64>,
    index: HashMap<u64, usize>,
    pub vectors: Array2<F>,
}

impl<F: Scalar> SentenceVectors<F> {
    pub fn new(tag: &str, ids: Vec<u64>, vectors: Array2<F>) -> Self {
        assert_eq!(ids.len(), vectors.nrows(), "one row per id");
        let index = ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
        SentenceVectors { tag: tag.to_string(), ids, index, vectors }
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn get(&self, id: u64) -> Option<ArrayView1<'_, F>> {
        self.index.get(&id).map(|i| self.vectors.row(*i))
    }

    /// Line 1 `count dim`, then `id v1 .. vd` per sentence.
    pub fn to_text(&self) -> String {
        let keys: Vec<String> = self.ids.iter().map(|i| i.to_string()).collect();
        write_rows(keys.iter().map(String::as_str).zip(self.vectors.rows()), self.len(), self.dim())
    }

    pub fn from_text(tag: &str, text: &str) -> Result<Self, EmbeddingFileError> {
        let (ids, vectors) = read_rows(text, |k| k.parse::<u64>().ok())?;
        Ok(SentenceVectors::new(tag, ids, vectors))
    }
}

/// Parses an externally produced embedding file.
pub fn import_embeddings<F: Scalar>(tag: &str, text: &str) -> Result<SentenceVectors<F>, EmbeddingFileError> {
    SentenceVectors::from_text(tag, text)
}

/// One sentence per line, tokens separated by single spaces.
pub fn export_corpus(sentences: &[Vec<String>]) -> String {
    let mut out = String::new();
    for s in sentences {
        out.push_str(&s.join(" "));
        out.push('\n');
    }
    out
}

pub fn import_corpus(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split_whitespace().map(str::to_string).collect())
        .collect()
}

fn write_rows<'a, F: Scalar>(
    rows: impl Iterator<Item = (&'a str, ArrayView1<'a, F>)>,
    count: usize,
    dim: usize,
) -> String {
    let mut out = format!("{count} {dim}\n");
    for (key, row) in rows {
        out.push_str(key);
        for v in row {
            write!(out, " {v}").unwrap();
        }
        out.push('\n');
    }
    out
}

fn read_rows<K: std::hash::Hash + Eq + Clone, F: Scalar>(
    text: &str,
    parse_key: impl Fn(&str) -> Option<K>,
) -> Result<(Vec<K>, Array2<F>), EmbeddingFileError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| EmbeddingFileError::MalformedHeader("empty file".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let (count, dim) = match fields.as_slice() {
        [c, d] => match (c.parse::<usize>(), d.parse::<usize>()) {
            (Ok(c), Ok(d)) => (c, d),
            _ => return Err(EmbeddingFileError::MalformedHeader(header.to_string())),
        },
        _ => return Err(EmbeddingFileError::MalformedHeader(header.to_string())),
    };
    let mut keys = Vec::with_capacity(count);
    let mut seen = std::collections::HashSet::new();
    let mut data = Vec::with_capacity(count * dim);
    for (i, line) in lines {
        let line_no = i + 1;
        let mut parts = line.split_whitespace();
        let raw_key = parts.next().unwrap_or("");
        let key = parse_key(raw_key).ok_or_else(|| EmbeddingFileError::BadValue { line: line_no, value: raw_key.into() })?;
        let values: Vec<&str> = parts.collect();
        if values.len() != dim {
            return Err(EmbeddingFileError::DimensionMismatch { line: line_no, expected: dim, found: values.len() });
        }
        if !seen.insert(key.clone()) {
            return Err(EmbeddingFileError::DuplicateId { line: line_no, id: raw_key.into() });
        }
        for v in values {
            data.push(F::parse_exact(v).ok_or_else(|| EmbeddingFileError::BadValue { line: line_no, value: v.into() })?);
        }
        keys.push(key);
    }
    if keys.len() != count {
        return Err(EmbeddingFileError::MalformedHeader(format!("header declares {count} rows, body has {}", keys.len())));
    }
    let vectors = Array2::from_shape_vec((count, dim), data).expect("shape checked");
    Ok((keys, vectors))
}

/// Mean of the token vectors. Rows are summed in table order, so any
/// permutation of `tokens` yields a bit-identical result.
pub fn bow_encode<F: Scalar>(tokens: &[String], table: &EmbeddingTable<F>) -> Result<Array1<F>, EncoderError> {
    if tokens.is_empty() {
        return Err(EncoderError::EmptySequence);
    }
    let mut rows = tokens
        .iter()
        .map(|t| table.index_of(t).ok_or_else(|| EncoderError::OutOfVocabulary(t.clone())))
        .collect::<Result<Vec<_>, _>>()?;
    rows.sort_unstable();
    let mut sum = Array1::zeros(table.dim());
    for r in rows {
        sum += &table.vectors.row(r);
    }
    Ok(sum / F::of(tokens.len() as f64))
}

/// BOW vectors for `(id, tokens)` pairs.
pub fn bow_encode_all<F: Scalar>(
    sentences: &[(u64, Vec<String>)],
    table: &EmbeddingTable<F>,
) -> Result<SentenceVectors<F>, EncoderError> {
    let mut m = Array2::zeros((sentences.len(), table.dim()));
    for (i, (_, tokens)) in sentences.iter().enumerate() {
        m.row_mut(i).assign(&bow_encode(tokens, table)?);
    }
    Ok(SentenceVectors::new("bow", sentences.iter().map(|s| s.0).collect(), m))
}

/// Standard normal vector determined by `(key, seed)` alone.
pub fn random_vector<F: Scalar>(key: u64, dim: usize, seed: u64) -> Array1<F> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &key.to_string()));
    (0..dim).map(|_| F::of(StandardNormal.sample(&mut rng))).collect()
}

pub fn random_vectors<F: Scalar>(ids: &[u64], dim: usize, seed: u64) -> SentenceVectors<F> {
    let mut m = Array2::zeros((ids.len(), dim));
    for (i, id) in ids.iter().enumerate() {
        m.row_mut(i).assign(&random_vector::<F>(*id, dim, seed));
    }
    SentenceVectors::new("random", ids.to_vec(), m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn toy() -> EmbeddingTable<f32> {
        let forms = ["the", "men", "were", "sleeping"].map(String::from).to_vec();
        EmbeddingTable::new(forms, array![[1.0, 2.0], [0.5, -1.0], [3.0, 0.25], [-2.0, 4.0]])
    }

    fn toks(s: &str) -> Vec<String> {
        s.split(' ').map(String::from).collect()
    }

    #[test]
    fn bow_of_identical_tokens_is_the_row() {
        let t = toy();
        assert_eq!(bow_encode(&toks("sleeping sleeping"), &t).unwrap(), t.get("sleeping").unwrap());
    }

    #[test]
    fn bow_matches_hand_average() {
        let v = bow_encode(&toks("the men were sleeping"), &toy()).unwrap();
        assert_eq!(v, array![(1.0 + 0.5 + 3.0 - 2.0) / 4.0, (2.0 - 1.0 + 0.25 + 4.0) / 4.0]);
        assert!(matches!(bow_encode(&toks("the cat"), &toy()), Err(EncoderError::OutOfVocabulary(_))));
    }

    #[test]
    fn embedding_file_errors() {
        assert!(matches!(
            SentenceVectors::<f32>::from_text("x", "2 2\n1 0.5 0.5\n"),
            Err(EmbeddingFileError::MalformedHeader(_))
        ));
        assert_eq!(
            SentenceVectors::<f32>::from_text("x", "2 2\n1 0.5 0.5\n2 0.5\n"),
            Err(EmbeddingFileError::DimensionMismatch { line: 3, expected: 2, found: 1 })
        );
        assert!(matches!(
            SentenceVectors::<f32>::from_text("x", "2 1\n1 0.5\n1 0.5\n"),
            Err(EmbeddingFileError::DuplicateId { line: 3, .. })
        ));
    }

    #[test]
    fn random_vectors_are_reproducible() {
        let a = random_vector::<f64>(17, 8, 3);
        assert_eq!(a, random_vector::<f64>(17, 8, 3));
        assert_ne!(a, random_vector::<f64>(18, 8, 3));
    }
}
