use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::{Split, SplitPolicy, TaskDataset, TaskInstance, TaskKind};
use crate::event::{LemmaId, Polarity, Vocabulary};
use crate::realizer::{AnnotatedSentence, InflectionLexicon, Relation};

/// Largest tolerated per-lemma frequency gap between labels.
pub const DIVERGENCE_THRESHOLD: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaDivergence {
    pub lemma: String,
    pub positive: f64,
    pub negative: f64,
    pub divergence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitBalance {
    pub split: Split,
    pub positive_ratio: f64,
    /// Fraction of instances per label using each lemma as a probe.
    pub probe_lemmas: Vec<LemmaDivergence>,
    /// Fraction of instances per label whose sentence contains each lemma.
    pub sentence_lemmas: Vec<LemmaDivergence>,
    /// Sentence length histograms for labels 0 and 1.
    pub lengths: [BTreeMap<usize, usize>; 2],
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BalanceReport {
    pub splits: Vec<SplitBalance>,
    pub max_probe_divergence: f64,
    pub max_sentence_divergence: f64,
    /// Lemmas whose divergence exceeds [`DIVERGENCE_THRESHOLD`].
    pub flagged: Vec<String>,
}

impl BalanceReport {
    pub fn max_divergence(&self) -> f64 {
        self.max_probe_divergence.max(self.max_sentence_divergence)
    }
}

fn divergences(
    instances: &[TaskInstance],
    vocab: &Vocabulary,
    lemmas_of: impl Fn(&TaskInstance) -> BTreeSet<LemmaId>,
) -> Vec<LemmaDivergence> {
    let mut counts: BTreeMap<LemmaId, [usize; 2]> = BTreeMap::new();
    let mut totals = [0usize; 2];
    for inst in instances {
        let label = inst.label as usize;
        totals[label] += 1;
        for l in lemmas_of(inst) {
            counts.entry(l).or_default()[label] += 1;
        }
    }
    let frac = |c: usize, t: usize| if t == 0 { 0.0 } else { c as f64 / t as f64 };
    counts
        .into_iter()
        .map(|(l, c)| {
            let (negative, positive) = (frac(c[0], totals[0]), frac(c[1], totals[1]));
            LemmaDivergence { lemma: vocab.name(l).to_string(), positive, negative, divergence: (positive - negative).abs() }
        })
        .collect()
}

/// Per-label lemma frequencies, their divergence, label ratio and lengths.
pub fn audit_balance(ds: &TaskDataset, vocab: &Vocabulary) -> BalanceReport {
    let mut report = BalanceReport::default();
    let mut flagged = BTreeSet::new();
    for split in [Split::Train, Split::Test] {
        let instances = ds.split(split);
        let sentence_lemmas = |i: &TaskInstance| ds.sentence(i.sentence_id).map(|s| s.event.lemmas()).unwrap_or_default();
        let probe = divergences(instances, vocab, |i| i.probes.iter().copied().collect());
        let sent = divergences(instances, vocab, sentence_lemmas);
        let mut lengths: [BTreeMap<usize, usize>; 2] = Default::default();
        for i in instances {
            let len = ds.sentence(i.sentence_id).map_or(0, |s| s.tokens.len());
            *lengths[i.label as usize].entry(len).or_default() += 1;
        }
        for d in probe.iter().chain(&sent) {
            if d.divergence > DIVERGENCE_THRESHOLD {
                flagged.insert(d.lemma.clone());
            }
        }
        let max = |v: &[LemmaDivergence]| v.iter().map(|d| d.divergence).fold(0.0, f64::max);
        report.max_probe_divergence = report.max_probe_divergence.max(max(&probe));
        report.max_sentence_divergence = report.max_sentence_divergence.max(max(&sent));
        report.splits.push(SplitBalance {
            split,
            positive_ratio: super::positive_ratio(instances),
            probe_lemmas: probe,
            sentence_lemmas: sent,
            lengths,
        });
    }
    report.flagged = flagged.into_iter().collect();
    report
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitFailure {
    SharedSentence { id: u64 },
    SharedString { text: String },
    SeenPair { noun: LemmaId, verb: LemmaId },
    HeldOutPairInTrain { noun: LemmaId, verb: LemmaId },
    SeenAdverb { adverb: LemmaId },
    AdverbNotHeldOut { adverb: LemmaId },
    ProbeMissingFromTrain { lemma: LemmaId },
    MissingSentence { id: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SplitVerdict {
    pub failures: Vec<SplitFailure>,
}

impl SplitVerdict {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks sentence disjointness, probe coverage and the task's holdout policy.
pub fn verify_split(ds: &TaskDataset, policy: &SplitPolicy) -> SplitVerdict {
    let mut failures = Vec::new();
    let ids = |split| ds.split(split).iter().map(|i| i.sentence_id).collect::<BTreeSet<u64>>();
    let (train_ids, test_ids) = (ids(Split::Train), ids(Split::Test));
    for id in train_ids.intersection(&test_ids) {
        failures.push(SplitFailure::SharedSentence { id: *id });
    }
    let mut sentences = |set: &BTreeSet<u64>| {
        set.iter()
            .filter_map(|id| {
                let s = ds.sentence(*id);
                if s.is_none() {
                    failures.push(SplitFailure::MissingSentence { id: *id });
                }
                s
            })
            .collect::<Vec<&AnnotatedSentence>>()
    };
    let (train_sents, test_sents) = (sentences(&train_ids), sentences(&test_ids));
    let train_texts: HashMap<String, u64> = train_sents.iter().map(|s| (s.text(), s.id)).collect();
    for s in &test_sents {
        if train_texts.get(&s.text()).is_some_and(|id| *id != s.id) {
            failures.push(SplitFailure::SharedString { text: s.text() });
        }
    }

    let train_probes: BTreeSet<LemmaId> = ds.train.iter().flat_map(|i| i.probes.iter().copied()).collect();
    let test_probes: BTreeSet<LemmaId> = ds.test.iter().flat_map(|i| i.probes.iter().copied()).collect();
    for lemma in test_probes.difference(&train_probes) {
        failures.push(SplitFailure::ProbeMissingFromTrain { lemma: *lemma });
    }

    match ds.task {
        TaskKind::SemRole => {
            let pairs = |v: &[TaskInstance]| v.iter().map(|i| (i.probes[0], i.probes[1])).collect::<BTreeSet<_>>();
            let (train_pairs, test_pairs) = (pairs(&ds.train), pairs(&ds.test));
            for &(noun, verb) in train_pairs.intersection(&test_pairs) {
                failures.push(SplitFailure::SeenPair { noun, verb });
            }
            for &(noun, verb) in train_pairs.intersection(&policy.held_out_pairs) {
                failures.push(SplitFailure::HeldOutPairInTrain { noun, verb });
            }
        }
        TaskKind::Negation => {
            let adverbs = |v: &[&AnnotatedSentence]| {
                v.iter()
                    .flat_map(|s| s.event.clauses().flat_map(|(_, c)| c.features.adverbs.clone()).collect::<Vec<_>>())
                    .collect::<BTreeSet<_>>()
            };
            let (train_adv, test_adv) = (adverbs(&train_sents), adverbs(&test_sents));
            for &adverb in train_adv.intersection(&test_adv) {
                failures.push(SplitFailure::SeenAdverb { adverb });
            }
            if !policy.held_out_adverbs.is_empty() {
                for &adverb in test_adv.difference(&policy.held_out_adverbs) {
                    failures.push(SplitFailure::AdverbNotHeldOut { adverb });
                }
            }
        }
        _ => {}
    }
    SplitVerdict { failures }
}

/// Label recomputed from the sentence's gold annotations.
pub fn gold_label(task: TaskKind, sentence: &AnnotatedSentence, probes: &[LemmaId]) -> Option<u8> {
    let g = &sentence.gold;
    match (task, probes) {
        (TaskKind::SemRole, &[n, v]) => match g.relation(n, v)? {
            Relation::Agent => Some(1),
            Relation::Patient => Some(0),
            Relation::Unrelated => None,
        },
        (TaskKind::Negation, &[v]) => g.polarity_of(v).map(|p| (p == Polarity::Positive) as u8),
        (TaskKind::Content1Probe, &[v]) => Some(g.contains(v) as u8),
        (TaskKind::Content2Probe, &[n, v]) => Some((g.contains(n) && g.contains(v)) as u8),
        (TaskKind::Order, &[n, v]) => match (g.positions_of(n), g.positions_of(v)) {
            (&[np], &[vp]) => Some((np < vp) as u8),
            _ => None,
        },
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("surface oracle does not cover {0}")]
    Unsupported(TaskKind),
    #[error("{task} expects {expected} probes, got {found}")]
    Arity { task: TaskKind, expected: usize, found: usize },
    #[error("probe lemma {} occurs {count} times", lemma.0)]
    Ambiguous { lemma: LemmaId, count: usize },
}

/// Label from the token string alone: inflection-aware lookup and position comparison.
pub fn surface_oracle_label(
    task: TaskKind,
    tokens: &[String],
    probes: &[LemmaId],
    lexicon: &InflectionLexicon,
) -> Result<u8, OracleError> {
    if !matches!(task, TaskKind::Content1Probe | TaskKind::Content2Probe | TaskKind::Order) {
        return Err(OracleError::Unsupported(task));
    }
    if probes.len() != task.arity() {
        return Err(OracleError::Arity { task, expected: task.arity(), found: probes.len() });
    }
    let positions = |lemma: LemmaId| -> Vec<usize> {
        tokens.iter().enumerate().filter(|(_, t)| lexicon.lemma_of(t) == Some(lemma)).map(|(i, _)| i).collect()
    };
    match task {
        TaskKind::Order => {
            let mut at = Vec::new();
            for &p in probes {
                let pos = positions(p);
                if pos.len() != 1 {
                    return Err(OracleError::Ambiguous { lemma: p, count: pos.len() });
                }
                at.push(pos[0]);
            }
            Ok((at[0] < at[1]) as u8)
        }
        _ => Ok(probes.iter().all(|p| !positions(*p).is_empty()) as u8),
    }
}
