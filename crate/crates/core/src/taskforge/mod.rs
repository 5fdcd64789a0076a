//! Classification datasets over realized sentences: semantic role, negation,
//! word content (one and two probes) and word order.
//!
//! SemRole, Negation and Order pair each sentence with a mirror whose token
//! multiset is identical but whose label is flipped, so any order-blind
//! encoder sits exactly at chance. Content tasks draw one positive and one
//! negative probe per sentence with per-lemma frequency balancing.

mod audit;
mod build;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::event::{
    ClauseSite, Constraint, LemmaId, PartialEvent, PartOfSpeech, TemplateLimits, Transitivity, UnknownKeyword, Vocabulary,
};
use crate::generator::{adverb_sequences, GenerationConfig};
use crate::hashing::derive_seed;
use crate::realizer::{AnnotatedSentence, RealizeError};

pub use audit::{
    audit_balance, gold_label, surface_oracle_label, verify_split, BalanceReport, LemmaDivergence, OracleError,
    SplitBalance, SplitFailure, SplitVerdict, DIVERGENCE_THRESHOLD,
};
pub use build::{build_content, build_negation, build_order, build_semrole, build_task};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TaskKind {
    SemRole,
    Negation,
    Content1Probe,
    Content2Probe,
    Order,
}

impl TaskKind {
    pub const ALL: [TaskKind; 5] =
        [TaskKind::SemRole, TaskKind::Negation, TaskKind::Content1Probe, TaskKind::Content2Probe, TaskKind::Order];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::SemRole => "SemRole",
            TaskKind::Negation => "Negation",
            TaskKind::Content1Probe => "Content1Probe",
            TaskKind::Content2Probe => "Content2Probe",
            TaskKind::Order => "Order",
        }
    }

    /// Number of probe lemmas per instance.
    pub fn arity(self) -> usize {
        match self {
            TaskKind::Negation | TaskKind::Content1Probe => 1,
            _ => 2,
        }
    }

    /// Position in [`TaskKind::ALL`]; also the sentence-id block of the task.
    pub fn index(self) -> usize {
        TaskKind::ALL.iter().position(|t| *t == self).unwrap()
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskKind {
    type Err = UnknownKeyword;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TaskKind::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| UnknownKeyword { kind: "task", value: s.to_string() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

/// Sentence ids of a task occupy `[index * SENTENCE_ID_BLOCK, (index + 1) * SENTENCE_ID_BLOCK)`.
pub const SENTENCE_ID_BLOCK: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TaskInstance {
    pub task: TaskKind,
    pub sentence_id: u64,
    /// Noun then verb for two-probe tasks; a verb for one-probe tasks.
    pub probes: Vec<LemmaId>,
    pub label: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSizes {
    pub train: usize,
    pub test: usize,
}

impl Default for TaskSizes {
    fn default() -> Self {
        TaskSizes { train: 4000, test: 1000 }
    }
}

/// Held-out material forcing generalization at test time.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SplitPolicy {
    /// SemRole (noun, verb) probe pairs reserved for test.
    pub held_out_pairs: BTreeSet<(LemmaId, LemmaId)>,
    /// Negation adverbs reserved for test.
    pub held_out_adverbs: BTreeSet<LemmaId>,
}

impl SplitPolicy {
    /// Holds out `pair_fraction` of (noun, transitive verb) pairs and `adverb_count` adverbs,
    /// keeping every noun and verb in at least one training pair.
    pub fn sample(vocab: &Vocabulary, pair_fraction: f64, adverb_count: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "split-policy"));
        let nouns = vocab.nouns();
        let verbs = vocab.verbs_with(Transitivity::Transitive);
        let mut pairs: Vec<(LemmaId, LemmaId)> =
            nouns.iter().flat_map(|n| verbs.iter().map(move |v| (*n, *v))).collect();
        let k = (pairs.len() as f64 * pair_fraction).round() as usize;
        let held_out_pairs = loop {
            pairs.shuffle(&mut rng);
            let (held, kept) = pairs.split_at(k);
            let covered = nouns.iter().all(|n| kept.iter().any(|p| p.0 == *n))
                && verbs.iter().all(|v| kept.iter().any(|p| p.1 == *v));
            if covered || k == 0 {
                break held.iter().copied().collect();
            }
        };
        let mut adverbs = vocab.adverbs();
        adverbs.shuffle(&mut rng);
        let held_out_adverbs = adverbs.into_iter().take(adverb_count).collect();
        SplitPolicy { held_out_pairs, held_out_adverbs }
    }

    pub fn train_adverbs(&self, vocab: &Vocabulary) -> Vec<LemmaId> {
        vocab.adverbs().into_iter().filter(|a| !self.held_out_adverbs.contains(a)).collect()
    }

    pub fn test_adverbs(&self) -> Vec<LemmaId> {
        self.held_out_adverbs.iter().copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub task: TaskKind,
    pub config_hash: String,
    pub train_size: usize,
    pub test_size: usize,
    pub train_positive_ratio: f64,
    pub test_positive_ratio: f64,
    pub held_out_pairs: Vec<[String; 2]>,
    pub held_out_adverbs: Vec<String>,
    pub balance: BalanceReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskDataset {
    pub task: TaskKind,
    pub train: Vec<TaskInstance>,
    pub test: Vec<TaskInstance>,
    /// Every sentence referenced by an instance, sorted by id.
    pub sentences: Vec<AnnotatedSentence>,
    pub manifest: DatasetManifest,
}

impl TaskDataset {
    pub fn sentence(&self, id: u64) -> Option<&AnnotatedSentence> {
        self.sentences.binary_search_by_key(&id, |s| s.id).ok().map(|i| &self.sentences[i])
    }

    pub fn split(&self, split: Split) -> &[TaskInstance] {
        match split {
            Split::Train => &self.train,
            Split::Test => &self.test,
        }
    }

    pub fn instances(&self) -> impl Iterator<Item = (Split, &TaskInstance)> {
        self.train.iter().map(|i| (Split::Train, i)).chain(self.test.iter().map(|i| (Split::Test, i)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TaskError {
    #[error("{task}: pool too small, built {found} of {needed} {split} instances")]
    InsufficientPool { task: TaskKind, split: &'static str, needed: usize, found: usize },
    #[error("{task}: split sizes must be even, got {train}/{test}")]
    OddSize { task: TaskKind, train: usize, test: usize },
    #[error(transparent)]
    Realize(#[from] RealizeError),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Tab-separated `task split sentence_id probes label`, probes as comma-joined lemma names.
pub fn dataset_to_tsv(ds: &TaskDataset, vocab: &Vocabulary) -> String {
    let mut out = String::from("task\tsplit\tsentence_id\tprobes\tlabel\n");
    for (split, inst) in ds.instances() {
        let probes: Vec<&str> = inst.probes.iter().map(|p| vocab.name(*p)).collect();
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            inst.task,
            split.as_str(),
            inst.sentence_id,
            probes.join(","),
            inst.label
        ));
    }
    out
}

pub fn instances_from_tsv(text: &str, vocab: &Vocabulary) -> Result<Vec<(Split, TaskInstance)>, TaskError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| TaskError::Parse { line: i + 1, message };
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 5 {
            return Err(err(format!("expected 5 columns, found {}", cols.len())));
        }
        let task: TaskKind = cols[0].parse().map_err(|e: UnknownKeyword| err(e.to_string()))?;
        let split = match cols[1] {
            "train" => Split::Train,
            "test" => Split::Test,
            other => return Err(err(format!("unknown split `{other}`"))),
        };
        let sentence_id = cols[2].parse().map_err(|_| err(format!("bad sentence id `{}`", cols[2])))?;
        let probes = cols[3]
            .split(',')
            .map(|p| vocab.lookup(p).ok_or_else(|| err(format!("unknown lemma `{p}`"))))
            .collect::<Result<Vec<_>, _>>()?;
        let label = match cols[4] {
            "0" => 0,
            "1" => 1,
            other => return Err(err(format!("bad label `{other}`"))),
        };
        out.push((split, TaskInstance { task, sentence_id, probes, label }));
    }
    Ok(out)
}

/// Probe lemma inventory: nouns then verbs.
pub fn probe_inventory(vocab: &Vocabulary) -> Vec<LemmaId> {
    vocab.probe_lemmas()
}

fn positive_ratio(instances: &[TaskInstance]) -> f64 {
    if instances.is_empty() {
        return 0.0;
    }
    instances.iter().filter(|i| i.label == 1).count() as f64 / instances.len() as f64
}

fn lemma_names(vocab: &Vocabulary, ids: impl IntoIterator<Item = LemmaId>) -> Vec<String> {
    ids.into_iter().map(|l| vocab.name(l).to_string()).collect()
}

fn is_pos(vocab: &Vocabulary, lemma: LemmaId, pos: PartOfSpeech) -> bool {
    vocab.pos(lemma) == Some(pos)
}

/// Per-lemma counts keyed by lemma.
type Counts = BTreeMap<LemmaId, usize>;

/// Generation recipes for the pool backing `task`. Negation yields two
/// configs, one over training adverbs and one over held-out adverbs.
pub fn pool_configs(
    task: TaskKind,
    vocab: &Vocabulary,
    policy: &SplitPolicy,
    max_pool_size: usize,
    seed: u64,
) -> Vec<GenerationConfig> {
    let mut base = GenerationConfig::new(vocab.clone());
    base.max_pool_size = Some(max_pool_size);
    base.seed = derive_seed(seed, task.as_str());
    if task != TaskKind::Negation {
        return vec![base];
    }
    base.limits = TemplateLimits::exactly_one_relative();
    base.constraint = negation_constraint(vocab);
    let mut train = base.clone();
    train.domains.adverb_sequences = adverb_sequences(&policy.train_adverbs(vocab), 1, 2);
    let mut test = base;
    test.domains.adverb_sequences = adverb_sequences(&policy.test_adverbs(), 1, 2);
    test.max_pool_size = Some(max_pool_size / 4);
    test.seed = derive_seed(seed, "Negation-test");
    vec![train, test]
}

/// Exactly one negative frame among main and relative clause, and no frame
/// realized without an auxiliary.
pub fn negation_constraint(vocab: &Vocabulary) -> Constraint {
    let mut c = Constraint::any();
    let partial = |pairs: &[(&str, &str)]| {
        let mut p = PartialEvent::wildcard();
        for (k, v) in pairs {
            p.set(k, v, vocab).expect("static key path");
        }
        p
    };
    for site in [ClauseSite::AgentRelative, ClauseSite::PatientRelative] {
        let rc = site.key_prefix();
        for pol in ["positive", "negative"] {
            c = c.prohibit(partial(&[("main.polarity", pol), (&format!("{rc}.polarity"), pol)]));
        }
        c = c.prohibit(partial(&[(&format!("{rc}.voice"), "active"), (&format!("{rc}.aspect"), "simple")]));
    }
    c.prohibit(partial(&[("main.voice", "active"), ("main.aspect", "simple")]))
}
