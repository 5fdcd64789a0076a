use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{
    audit_balance, is_pos, lemma_names, positive_ratio, BalanceReport, Counts, DatasetManifest, Split, SplitPolicy,
    TaskDataset, TaskError, TaskInstance, TaskKind, TaskSizes, SENTENCE_ID_BLOCK,
};
use crate::event::{Aspect, EventRepresentation, LemmaId, Number, PartOfSpeech, Polarity, Voice};
use crate::hashing::{config_hash, derive_seed};
use crate::realizer::{AnnotatedSentence, Realizer};

struct Assembler<'a> {
    task: TaskKind,
    realizer: &'a Realizer,
    sizes: TaskSizes,
    rng: ChaCha8Rng,
    used: HashSet<Vec<String>>,
    sentences: Vec<AnnotatedSentence>,
    train: Vec<TaskInstance>,
    test: Vec<TaskInstance>,
    next_id: u64,
}

impl<'a> Assembler<'a> {
    fn new(task: TaskKind, realizer: &'a Realizer, sizes: TaskSizes, seed: u64) -> Result<Self, TaskError> {
        if sizes.train % 2 != 0 || sizes.test % 2 != 0 {
            return Err(TaskError::OddSize { task, train: sizes.train, test: sizes.test });
        }
        Ok(Assembler {
            task,
            realizer,
            sizes,
            rng: ChaCha8Rng::seed_from_u64(derive_seed(seed, task.as_str())),
            used: HashSet::new(),
            sentences: Vec::new(),
            train: Vec::new(),
            test: Vec::new(),
            next_id: task.index() as u64 * SENTENCE_ID_BLOCK,
        })
    }

    fn done(&self) -> bool {
        self.train.len() >= self.sizes.train && self.test.len() >= self.sizes.test
    }

    fn has_room(&self, split: Split) -> bool {
        match split {
            Split::Train => self.train.len() < self.sizes.train,
            Split::Test => self.test.len() < self.sizes.test,
        }
    }

    /// Random split proportional to the remaining capacity.
    fn pick_split(&mut self) -> Split {
        let train_left = self.sizes.train.saturating_sub(self.train.len());
        let test_left = self.sizes.test.saturating_sub(self.test.len());
        if self.rng.random_range(0..train_left + test_left) < test_left {
            Split::Test
        } else {
            Split::Train
        }
    }

    fn shuffled(&mut self, n: usize) -> Vec<usize> {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut self.rng);
        order
    }

    fn realize(&self, event: &EventRepresentation) -> Result<AnnotatedSentence, TaskError> {
        Ok(self.realizer.realize(event)?)
    }

    /// Commits sentences and their instances; `None` if any surface string is taken.
    fn commit(
        &mut self,
        split: Split,
        items: Vec<(AnnotatedSentence, Vec<(Vec<LemmaId>, u8)>)>,
    ) -> bool {
        let fresh: HashSet<&Vec<String>> = items.iter().map(|(s, _)| &s.tokens).collect();
        if fresh.len() != items.len() || items.iter().any(|(s, _)| self.used.contains(&s.tokens)) {
            return false;
        }
        for (mut sentence, probes) in items {
            let id = self.next_id;
            self.next_id += 1;
            sentence.id = id;
            sentence.event.id = id;
            self.used.insert(sentence.tokens.clone());
            for (probes, label) in probes {
                let inst = TaskInstance { task: self.task, sentence_id: id, probes, label };
                match split {
                    Split::Train => self.train.push(inst),
                    Split::Test => self.test.push(inst),
                }
            }
            self.sentences.push(sentence);
        }
        true
    }

    fn finish<H: Serialize>(self, pool: &[EventRepresentation], policy: &SplitPolicy, extra: H) -> Result<TaskDataset, TaskError> {
        for (split, have, need) in [("train", self.train.len(), self.sizes.train), ("test", self.test.len(), self.sizes.test)] {
            if have < need {
                return Err(TaskError::InsufficientPool { task: self.task, split, needed: need, found: have });
            }
        }
        let vocab = self.realizer.vocabulary();
        let pool_hash = config_hash(&pool);
        let config_hash = config_hash(&(self.task, self.sizes, policy, pool_hash, extra));
        let (held_out_pairs, held_out_adverbs) = match self.task {
            TaskKind::SemRole => (
                policy
                    .held_out_pairs
                    .iter()
                    .map(|(n, v)| [vocab.name(*n).to_string(), vocab.name(*v).to_string()])
                    .collect(),
                Vec::new(),
            ),
            TaskKind::Negation => (Vec::new(), lemma_names(vocab, policy.held_out_adverbs.iter().copied())),
            _ => (Vec::new(), Vec::new()),
        };
        let mut ds = TaskDataset {
            task: self.task,
            manifest: DatasetManifest {
                task: self.task,
                config_hash,
                train_size: self.train.len(),
                test_size: self.test.len(),
                train_positive_ratio: positive_ratio(&self.train),
                test_positive_ratio: positive_ratio(&self.test),
                held_out_pairs,
                held_out_adverbs,
                balance: BalanceReport::default(),
            },
            train: self.train,
            test: self.test,
            sentences: self.sentences,
        };
        ds.manifest.balance = audit_balance(&ds, vocab);
        Ok(ds)
    }
}

/// A sentence, its label-flipped mirror, the shared probes and the original's label.
struct Mirrored {
    split: Option<Split>,
    mirror: EventRepresentation,
    probes: Vec<LemmaId>,
    label: u8,
}

fn build_mirrored(
    task: TaskKind,
    pool: &[EventRepresentation],
    realizer: &Realizer,
    policy: &SplitPolicy,
    sizes: TaskSizes,
    seed: u64,
    mut candidate: impl FnMut(&AnnotatedSentence, &mut ChaCha8Rng) -> Option<Mirrored>,
) -> Result<TaskDataset, TaskError> {
    let mut asm = Assembler::new(task, realizer, sizes, seed)?;
    let mut train_probes: HashSet<LemmaId> = HashSet::new();
    for i in asm.shuffled(pool.len()) {
        if asm.done() {
            break;
        }
        let sentence = asm.realize(&pool[i])?;
        let Some(c) = candidate(&sentence, &mut asm.rng) else { continue };
        let split = match c.split {
            Some(s) => s,
            // a probe lemma's first instance goes to training so test probes are always seen
            None if asm.has_room(Split::Train) && c.probes.iter().any(|p| !train_probes.contains(p)) => Split::Train,
            None => asm.pick_split(),
        };
        if !asm.has_room(split) {
            continue;
        }
        let mirror = asm.realize(&c.mirror)?;
        let probes = c.probes.clone();
        let items = vec![(sentence, vec![(c.probes.clone(), c.label)]), (mirror, vec![(c.probes, 1 - c.label)])];
        if asm.commit(split, items) && split == Split::Train {
            train_probes.extend(probes);
        }
    }
    asm.finish(pool, policy, seed)
}

fn swap_nouns(event: &EventRepresentation, a: LemmaId, b: LemmaId) -> EventRepresentation {
    event.map_nouns(|n| if n == a { b } else if n == b { a } else { n })
}

/// Number of the mention of `noun` in `event`.
fn noun_number(event: &EventRepresentation, noun: LemmaId) -> Option<Number> {
    event.clauses().find_map(|(_, c)| {
        if c.agent.noun == noun {
            Some(c.agent.number)
        } else {
            c.patient.as_ref().filter(|p| p.noun == noun).map(|p| p.number)
        }
    })
}

/// SemRole: is the probe noun the AGENT of the probe verb? Negatives are the
/// PATIENT of the same verb. Test instances use only held-out (noun, verb) pairs.
pub fn build_semrole(
    pool: &[EventRepresentation],
    realizer: &Realizer,
    policy: &SplitPolicy,
    sizes: TaskSizes,
    seed: u64,
) -> Result<TaskDataset, TaskError> {
    build_mirrored(TaskKind::SemRole, pool, realizer, policy, sizes, seed, |s, rng| {
        let frames: Vec<_> = s
            .event
            .clauses()
            .filter_map(|(_, c)| c.patient.as_ref().map(|p| (c.agent.noun, c.agent.number, p.noun, p.number, c.verb)))
            .filter(|(_, an, _, pn, _)| an == pn)
            .collect();
        let &(agent, _, patient, _, verb) = frames.get(rng.random_range(0..frames.len().max(1)))?;
        let held: Vec<LemmaId> =
            [agent, patient].into_iter().filter(|n| policy.held_out_pairs.contains(&(*n, verb))).collect();
        let (split, options) = if held.is_empty() { (Split::Train, vec![agent, patient]) } else { (Split::Test, held) };
        let noun = options[rng.random_range(0..options.len())];
        Some(Mirrored {
            split: Some(split),
            mirror: swap_nouns(&s.event, agent, patient),
            probes: vec![noun, verb],
            label: (noun == agent) as u8,
        })
    })
}

/// Whether a frame would be realized with do-support or a bare finite verb.
fn lacks_auxiliary(voice: Voice, aspect: Aspect) -> bool {
    voice == Voice::Active && aspect == Aspect::Simple
}

/// Negation: is the probe verb non-negated? Events must have exactly two
/// verbs and one negative frame; sentences whose adverbs are all held out go
/// to test, those with no held-out adverb to train, mixed ones are skipped.
pub fn build_negation(
    pool: &[EventRepresentation],
    realizer: &Realizer,
    policy: &SplitPolicy,
    sizes: TaskSizes,
    seed: u64,
) -> Result<TaskDataset, TaskError> {
    build_mirrored(TaskKind::Negation, pool, realizer, policy, sizes, seed, |s, rng| {
        let frames: Vec<_> = s.event.clauses().map(|(site, c)| (site, c.verb, c.features.clone())).collect();
        if frames.len() != 2 {
            return None;
        }
        let negatives = frames.iter().filter(|f| f.2.polarity == Polarity::Negative).count();
        if negatives != 1 || frames.iter().any(|f| lacks_auxiliary(f.2.voice, f.2.aspect)) {
            return None;
        }
        let adverbs: Vec<LemmaId> = frames.iter().flat_map(|f| f.2.adverbs.iter().copied()).collect();
        let held = adverbs.iter().filter(|a| policy.held_out_adverbs.contains(a)).count();
        let split = if held == 0 {
            Split::Train
        } else if held == adverbs.len() {
            Split::Test
        } else {
            return None;
        };
        let mut mirror = s.event.clone();
        for (site, _, _) in &frames {
            let f = mirror.clause_mut(*site).expect("site from event");
            f.features.polarity = match f.features.polarity {
                Polarity::Positive => Polarity::Negative,
                Polarity::Negative => Polarity::Positive,
            };
        }
        let (_, verb, feats) = &frames[rng.random_range(0..2)];
        Some(Mirrored {
            split: Some(split),
            mirror,
            probes: vec![*verb],
            label: (feats.polarity == Polarity::Positive) as u8,
        })
    })
}

/// Order: does the probe noun precede the probe verb? Each sentence is paired
/// with a mirror swapping a same-number noun before the verb with one after it.
pub fn build_order(
    pool: &[EventRepresentation],
    realizer: &Realizer,
    sizes: TaskSizes,
    seed: u64,
) -> Result<TaskDataset, TaskError> {
    let policy = SplitPolicy::default();
    build_mirrored(TaskKind::Order, pool, realizer, &policy, sizes, seed, |s, rng| {
        let mut triples = Vec::new();
        for verb in s.event.verbs() {
            let &[vp] = s.gold.positions_of(verb) else { continue };
            let nouns = s.event.nouns();
            for &before in &nouns {
                for &after in &nouns {
                    let (&[bp], &[ap]) = (s.gold.positions_of(before), s.gold.positions_of(after)) else { continue };
                    if bp < vp && vp < ap && noun_number(&s.event, before) == noun_number(&s.event, after) {
                        triples.push((verb, before, after));
                    }
                }
            }
        }
        if triples.is_empty() {
            return None;
        }
        let (verb, before, after) = triples[rng.random_range(0..triples.len())];
        let noun = if rng.random_bool(0.5) { before } else { after };
        Some(Mirrored {
            split: None,
            mirror: swap_nouns(&s.event, before, after),
            probes: vec![noun, verb],
            label: (noun == before) as u8,
        })
    })
}

/// The candidate with the smallest `mine - other` count, first among ties.
fn least_used(candidates: &[LemmaId], mine: &Counts, other: &Counts) -> Option<LemmaId> {
    candidates.iter().copied().min_by_key(|l| {
        mine.get(l).copied().unwrap_or(0) as i64 - other.get(l).copied().unwrap_or(0) as i64
    })
}

#[derive(Default)]
struct SplitCounts {
    pos_nouns: Counts,
    neg_nouns: Counts,
    pos_verbs: Counts,
    neg_verbs: Counts,
    negatives: usize,
}

/// Word content: arity 1 asks whether the probe verb occurs in the sentence;
/// arity 2 whether both probe noun and verb occur. Each sentence yields one
/// positive and one negative instance.
pub fn build_content(
    pool: &[EventRepresentation],
    arity: usize,
    realizer: &Realizer,
    sizes: TaskSizes,
    seed: u64,
) -> Result<TaskDataset, TaskError> {
    assert!(arity == 1 || arity == 2, "content arity is 1 or 2");
    let task = if arity == 1 { TaskKind::Content1Probe } else { TaskKind::Content2Probe };
    let vocab = realizer.vocabulary();
    let mut asm = Assembler::new(task, realizer, sizes, seed)?;
    let mut counts = [SplitCounts::default(), SplitCounts::default()];
    for i in asm.shuffled(pool.len()) {
        if asm.done() {
            break;
        }
        let split = asm.pick_split();
        if !asm.has_room(split) {
            continue;
        }
        let sentence = asm.realize(&pool[i])?;
        let lemmas = sentence.event.lemmas();
        let mut split_of = |pos| {
            let mut present = Vec::new();
            let mut absent = Vec::new();
            for l in vocab.ids().filter(|l| is_pos(vocab, *l, pos)) {
                if lemmas.contains(&l) {
                    present.push(l)
                } else {
                    absent.push(l)
                }
            }
            present.shuffle(&mut asm.rng);
            absent.shuffle(&mut asm.rng);
            (present, absent)
        };
        let (verbs_in, verbs_out) = split_of(PartOfSpeech::Verb);
        let (nouns_in, nouns_out) = split_of(PartOfSpeech::Noun);
        let c = &mut counts[(split == Split::Test) as usize];
        let pos_verb = least_used(&verbs_in, &c.pos_verbs, &c.neg_verbs);
        let (positive, negative) = if arity == 1 {
            let neg_verb = least_used(&verbs_out, &c.neg_verbs, &c.pos_verbs);
            match (pos_verb, neg_verb) {
                (Some(p), Some(n)) => (vec![p], vec![n]),
                _ => continue,
            }
        } else {
            let pos_noun = least_used(&nouns_in, &c.pos_nouns, &c.neg_nouns);
            let (noun_pool, verb_pool) = match c.negatives % 4 {
                1 => (&nouns_in, &verbs_out),
                3 => (&nouns_out, &verbs_in),
                _ => (&nouns_out, &verbs_out),
            };
            let neg_noun = least_used(noun_pool, &c.neg_nouns, &c.pos_nouns);
            let neg_verb = least_used(verb_pool, &c.neg_verbs, &c.pos_verbs);
            match (pos_noun, pos_verb, neg_noun, neg_verb) {
                (Some(pn), Some(pv), Some(nn), Some(nv)) => (vec![pn, pv], vec![nn, nv]),
                _ => continue,
            }
        };
        if !asm.commit(split, vec![(sentence, vec![(positive.clone(), 1), (negative.clone(), 0)])]) {
            continue;
        }
        let c = &mut counts[(split == Split::Test) as usize];
        c.negatives += 1;
        for (probes, label) in [(positive, 1), (negative, 0)] {
            for p in probes {
                let map = match (is_pos(vocab, p, PartOfSpeech::Noun), label) {
                    (true, 1) => &mut c.pos_nouns,
                    (true, _) => &mut c.neg_nouns,
                    (false, 1) => &mut c.pos_verbs,
                    (false, _) => &mut c.neg_verbs,
                };
                *map.entry(p).or_default() += 1;
            }
        }
    }
    asm.finish(pool, &SplitPolicy::default(), (seed, arity))
}

/// Dispatches to the builder for `task`. Negation and SemRole honor `policy`.
pub fn build_task(
    task: TaskKind,
    pool: &[EventRepresentation],
    realizer: &Realizer,
    policy: &SplitPolicy,
    sizes: TaskSizes,
    seed: u64,
) -> Result<TaskDataset, TaskError> {
    match task {
        TaskKind::SemRole => build_semrole(pool, realizer, policy, sizes, seed),
        TaskKind::Negation => build_negation(pool, realizer, policy, sizes, seed),
        TaskKind::Content1Probe => build_content(pool, 1, realizer, sizes, seed),
        TaskKind::Content2Probe => build_content(pool, 2, realizer, sizes, seed),
        TaskKind::Order => build_order(pool, realizer, sizes, seed),
    }
}

