//! Event population: fills structural templates with vocabulary items and
//! feature values, yielding pools of complete, constraint-satisfying events.
//!
//! A template plus a partial event defines a finite product space (verbs,
//! then nouns agent-before-patient, then numbers, then per-clause features).
//! Each point of the space decodes to at most one valid event, so iterating
//! indices gives the canonical order and drawing indices uniformly gives a
//! uniform sample over valid events.

use std::collections::HashSet;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::event::{
    enumerate_templates, parse_event_record, write_event_record, ArgumentSlot, Aspect, ClauseFrame, ClauseSite,
    Constraint, EventRepresentation, Field, Gap, LemmaId, Number, PartialClause, PartialEvent, Polarity, Presence,
    RecordError, Role, StructuralTemplate, SyntacticFeatures, TemplateLimits, Tense, Transitivity, Vocabulary, Voice,
};
use crate::hashing::config_hash;

/// Product spaces up to this size are enumerated exhaustively before subsampling.
pub const EXHAUSTIVE_SPACE_LIMIT: u64 = 2_000_000;

/// Value domains iterated for unfilled syntactic features.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureDomains {
    pub voices: Vec<Voice>,
    pub tenses: Vec<Tense>,
    pub aspects: Vec<Aspect>,
    pub polarities: Vec<Polarity>,
    pub numbers: Vec<Number>,
    /// Candidate adverb sequences per clause; `[[]]` means no adverbs.
    pub adverb_sequences: Vec<Vec<LemmaId>>,
}

impl Default for FeatureDomains {
    fn default() -> Self {
        FeatureDomains {
            voices: Voice::ALL.to_vec(),
            tenses: Tense::ALL.to_vec(),
            aspects: Aspect::ALL.to_vec(),
            polarities: Polarity::ALL.to_vec(),
            numbers: Number::ALL.to_vec(),
            adverb_sequences: vec![Vec::new()],
        }
    }
}

/// Ordered adverb sequences without repeats, lengths `min_len..=max_len`.
pub fn adverb_sequences(adverbs: &[LemmaId], min_len: usize, max_len: usize) -> Vec<Vec<LemmaId>> {
    let mut out = Vec::new();
    let mut frontier: Vec<Vec<LemmaId>> = vec![Vec::new()];
    for len in 0..=max_len {
        if len >= min_len {
            out.extend(frontier.iter().cloned());
        }
        if len == max_len {
            break;
        }
        let mut next = Vec::new();
        for seq in &frontier {
            for a in adverbs {
                if !seq.contains(a) {
                    let mut s = seq.clone();
                    s.push(*a);
                    next.push(s);
                }
            }
        }
        frontier = next;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationConfig {
    pub vocabulary: Vocabulary,
    pub limits: TemplateLimits,
    pub constraint: Constraint,
    pub domains: FeatureDomains,
    /// Cap on the pool; larger spaces are subsampled uniformly by `seed`.
    pub max_pool_size: Option<usize>,
    pub seed: u64,
}

impl GenerationConfig {
    pub fn new(vocabulary: Vocabulary) -> Self {
        GenerationConfig {
            vocabulary,
            limits: TemplateLimits::default(),
            constraint: Constraint::any(),
            domains: FeatureDomains::default(),
            max_pool_size: None,
            seed: 0,
        }
    }

    pub fn hash(&self) -> String {
        config_hash(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GenerationError {
    #[error("partial event cannot embed in template {template}: {reason}")]
    ShapeMismatch { template: String, reason: String },
    #[error("product space of template {0} overflows")]
    SpaceOverflow(String),
    #[error("line {line}: {source}")]
    Record { line: usize, source: RecordError },
}

struct ClausePlan {
    site: ClauseSite,
    gap: Option<Gap>,
    transitivity: Transitivity,
    verbs: Vec<LemmaId>,
    voices: Vec<Voice>,
    tenses: Vec<Tense>,
    aspects: Vec<Aspect>,
    polarities: Vec<Polarity>,
    adverbs: Vec<Vec<LemmaId>>,
}

/// Product space of one template under a partial event.
pub struct TemplateSpace {
    template: StructuralTemplate,
    partial: PartialEvent,
    clauses: Vec<ClausePlan>,
    /// Noun axes: main agent, main patient, then each transitive relative's free argument.
    nouns: Vec<LemmaId>,
    noun_axes: usize,
    numbers: Vec<Number>,
    radices: Vec<u64>,
    size: u64,
}

fn filtered<T: Copy + PartialEq>(domain: &[T], field: &Field<T>) -> Vec<T> {
    domain.iter().copied().filter(|v| field.admits(v)).collect()
}

fn mismatch(template: &StructuralTemplate, reason: impl Into<String>) -> GenerationError {
    GenerationError::ShapeMismatch { template: template.to_string(), reason: reason.into() }
}

impl TemplateSpace {
    pub fn new(
        template: StructuralTemplate,
        partial: &PartialEvent,
        cfg: &GenerationConfig,
    ) -> Result<Self, GenerationError> {
        let vocab = &cfg.vocabulary;
        let d = &cfg.domains;
        let mut clauses = Vec::new();
        for site in ClauseSite::ALL {
            let shape = template.shape_at(site);
            let presence = partial.relative(site);
            match (shape, presence) {
                (None, Some(Presence::Present(_))) => {
                    return Err(mismatch(&template, format!("partial requires a clause at {site}")))
                }
                (Some(_), Some(Presence::Absent)) => {
                    return Err(mismatch(&template, format!("partial forbids a clause at {site}")))
                }
                _ => {}
            }
            let Some((transitivity, gap)) = shape else { continue };
            let pc = partial.clause(site).cloned().unwrap_or_default();
            if let (Some(gap), Some(Presence::Present(pr))) = (gap, presence) {
                if !pr.gap.admits(&gap) {
                    return Err(mismatch(&template, format!("gap differs at {site}")));
                }
            }
            if !pc.transitivity.admits(&transitivity) {
                return Err(mismatch(&template, format!("transitivity differs at {site}")));
            }
            match (&pc.patient, transitivity) {
                (Presence::Present(_), Transitivity::Intransitive) => {
                    return Err(mismatch(&template, format!("patient on intransitive clause at {site}")))
                }
                (Presence::Absent, Transitivity::Transitive) => {
                    return Err(mismatch(&template, format!("partial forbids the patient at {site}")))
                }
                _ => {}
            }
            let mut voices = filtered(&d.voices, &pc.voice);
            if transitivity == Transitivity::Intransitive || gap == Some(Gap::Object) {
                voices.retain(|v| *v == Voice::Active);
            }
            clauses.push(ClausePlan {
                site,
                gap,
                transitivity,
                verbs: vocab.verbs_with(transitivity).into_iter().filter(|v| pc.verb.admits(v)).collect(),
                voices,
                tenses: filtered(&d.tenses, &pc.tense),
                aspects: filtered(&d.aspects, &pc.aspect),
                polarities: filtered(&d.polarities, &pc.polarity),
                adverbs: d.adverb_sequences.iter().filter(|s| pc.adverbs.admits(s)).cloned().collect(),
            });
        }
        let main_transitive = template.main == Transitivity::Transitive;
        let free_rc_args = clauses[1..].iter().filter(|c| c.transitivity == Transitivity::Transitive).count();
        let noun_axes = 1 + main_transitive as usize + free_rc_args;
        let nouns = vocab.nouns();
        let numbers = d.numbers.clone();

        let mut radices = Vec::new();
        for c in &clauses {
            radices.push(c.verbs.len() as u64);
        }
        radices.extend(std::iter::repeat_n(nouns.len() as u64, noun_axes));
        radices.extend(std::iter::repeat_n(numbers.len() as u64, noun_axes));
        for c in &clauses {
            radices.extend([
                c.voices.len() as u64,
                c.tenses.len() as u64,
                c.aspects.len() as u64,
                c.polarities.len() as u64,
                c.adverbs.len() as u64,
            ]);
        }
        let size = radices
            .iter()
            .try_fold(1u64, |acc, r| acc.checked_mul(*r))
            .ok_or_else(|| GenerationError::SpaceOverflow(template.to_string()))?;
        Ok(TemplateSpace { template, partial: partial.clone(), clauses, nouns, noun_axes, numbers, radices, size })
    }

    pub fn template(&self) -> &StructuralTemplate {
        &self.template
    }

    /// Number of points in the product space (an upper bound on valid events).
    pub fn size(&self) -> u64 {
        self.size
    }

    /// Event at `index`, or `None` when that point violates a population rule or the partial.
    pub fn decode(&self, mut index: u64) -> Option<EventRepresentation> {
        if index >= self.size {
            return None;
        }
        let id = index;
        let mut digits = vec![0usize; self.radices.len()];
        for (slot, r) in digits.iter_mut().zip(&self.radices).rev() {
            *slot = (index % r) as usize;
            index /= r;
        }
        let mut it = digits.into_iter();
        let verbs: Vec<LemmaId> = self.clauses.iter().map(|c| c.verbs[it.next().unwrap()]).collect();
        for i in 0..verbs.len() {
            if verbs[..i].contains(&verbs[i]) {
                return None;
            }
        }
        let nouns: Vec<LemmaId> = (0..self.noun_axes).map(|_| self.nouns[it.next().unwrap()]).collect();
        for i in 0..nouns.len() {
            if nouns[..i].contains(&nouns[i]) {
                return None;
            }
        }
        let numbers: Vec<Number> = (0..self.noun_axes).map(|_| self.numbers[it.next().unwrap()]).collect();
        let features: Vec<SyntacticFeatures> = self
            .clauses
            .iter()
            .map(|c| SyntacticFeatures {
                voice: c.voices[it.next().unwrap()],
                tense: c.tenses[it.next().unwrap()],
                aspect: c.aspects[it.next().unwrap()],
                polarity: c.polarities[it.next().unwrap()],
                adverbs: c.adverbs[it.next().unwrap()].clone(),
            })
            .collect();

        let mut noun_iter = nouns.iter().zip(&numbers);
        let (&an, &anum) = noun_iter.next().unwrap();
        let mut agent = ArgumentSlot::new(an, anum, Role::Agent);
        let mut patient = match self.template.main {
            Transitivity::Transitive => {
                let (&pn, &pnum) = noun_iter.next().unwrap();
                Some(ArgumentSlot::new(pn, pnum, Role::Patient))
            }
            Transitivity::Intransitive => None,
        };
        for (ci, plan) in self.clauses.iter().enumerate().skip(1) {
            let head = match plan.site {
                ClauseSite::AgentRelative => &agent,
                _ => patient.as_ref()?,
            };
            let (head_noun, head_number) = (head.noun, head.number);
            let feats = features[ci].clone();
            let gap = plan.gap.expect("relative clause has a gap");
            let frame = match plan.transitivity {
                Transitivity::Intransitive => ClauseFrame::intransitive(
                    verbs[ci],
                    ArgumentSlot::new(head_noun, head_number, Role::Agent),
                    feats,
                ),
                Transitivity::Transitive => {
                    let (&free_noun, &free_number) = noun_iter.next().unwrap();
                    let gapped_role = match (gap, feats.voice) {
                        (Gap::Subject, Voice::Passive) | (Gap::Object, _) => Role::Patient,
                        (Gap::Subject, Voice::Active) => Role::Agent,
                    };
                    let gapped = ArgumentSlot::new(head_noun, head_number, gapped_role);
                    let free_role = if gapped_role == Role::Agent { Role::Patient } else { Role::Agent };
                    let free = ArgumentSlot::new(free_noun, free_number, free_role);
                    let (a, p) = if gapped_role == Role::Agent { (gapped, free) } else { (free, gapped) };
                    ClauseFrame::transitive(verbs[ci], a, p, feats)
                }
            };
            match plan.site {
                ClauseSite::AgentRelative => agent = agent.with_relative(gap, frame),
                _ => patient = patient.map(|p| p.with_relative(gap, frame)),
            }
        }
        let main = ClauseFrame {
            verb: verbs[0],
            transitivity: self.template.main,
            agent,
            patient,
            features: features[0].clone(),
        };
        let event = EventRepresentation::new(id, main);
        self.partial.matches(&event).then_some(event)
    }

    pub fn iter(&self) -> impl Iterator<Item = EventRepresentation> + '_ {
        (0..self.size).filter_map(move |i| self.decode(i))
    }
}

/// Every fully populated event consistent with `template`, `partial` and `cfg`, in canonical order.
///
/// Event ids are indices into the template's product space.
pub fn populate<'a>(
    template: StructuralTemplate,
    partial: &PartialEvent,
    cfg: &'a GenerationConfig,
) -> Result<impl Iterator<Item = EventRepresentation> + 'a, GenerationError> {
    let space = TemplateSpace::new(template, partial, cfg)?;
    Ok((0..space.size).filter_map(move |i| space.decode(i)))
}

/// Embeds a partial clause at `site` of `template` (main clause or a relative clause).
pub fn embed_partial(
    template: &StructuralTemplate,
    clause: PartialClause,
    site: ClauseSite,
) -> Result<PartialEvent, GenerationError> {
    if template.shape_at(site).is_none() {
        return Err(mismatch(template, format!("template has no clause at {site}")));
    }
    Ok(PartialEvent::with_clause_at(clause, site))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolMode {
    /// Every valid event was enumerated; `valid` is the exhaustive count.
    Exhaustive { valid: usize },
    /// Uniform rejection sampling over the product spaces.
    Sampled { attempts: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateCount {
    pub template: String,
    pub space: u64,
    pub selected: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolManifest {
    pub config_hash: String,
    pub size: usize,
    pub mode: PoolMode,
    pub per_template: Vec<TemplateCount>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventPool {
    pub events: Vec<EventRepresentation>,
    pub manifest: PoolManifest,
}

impl EventPool {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// One event record per line.
    pub fn to_text(&self, vocab: &Vocabulary) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&write_event_record(e, vocab));
            out.push('\n');
        }
        out
    }

    pub fn events_from_text(text: &str, vocab: &Vocabulary) -> Result<Vec<EventRepresentation>, GenerationError> {
        text.lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| parse_event_record(l, vocab).map_err(|source| GenerationError::Record { line: i + 1, source }))
            .collect()
    }
}

/// Drops structural duplicates, keeping first occurrences in order.
pub fn dedupe(events: Vec<EventRepresentation>) -> Vec<EventRepresentation> {
    let mut seen = HashSet::new();
    events.into_iter().filter(|e| seen.insert(e.main.clone())).collect()
}

/// Union of [`populate`] over admitted templates, filtered by the constraint,
/// deduplicated and subsampled to `max_pool_size` when needed.
pub fn generate_pool(cfg: &GenerationConfig) -> Result<EventPool, GenerationError> {
    let mut spaces = Vec::new();
    for template in enumerate_templates(&cfg.limits) {
        match TemplateSpace::new(template, &cfg.constraint.required, cfg) {
            Ok(space) => spaces.push(space),
            Err(GenerationError::ShapeMismatch { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    let total: u64 = spaces.iter().map(|s| s.size).sum();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut warnings = Vec::new();

    // (template index, event)
    let mut selected: Vec<(usize, EventRepresentation)>;
    let mode;
    let exhaustive = match cfg.max_pool_size {
        None => true,
        Some(_) => total <= EXHAUSTIVE_SPACE_LIMIT,
    };
    if exhaustive {
        selected = Vec::new();
        for (ti, space) in spaces.iter().enumerate() {
            selected.extend(space.iter().filter(|e| cfg.constraint.matches(e)).map(|e| (ti, e)));
        }
        mode = PoolMode::Exhaustive { valid: selected.len() };
        if let Some(max) = cfg.max_pool_size {
            if selected.len() > max {
                let mut keep = index::sample(&mut rng, selected.len(), max).into_vec();
                keep.sort_unstable();
                let mut slots: Vec<Option<(usize, EventRepresentation)>> = selected.into_iter().map(Some).collect();
                selected = keep.into_iter().map(|i| slots[i].take().unwrap()).collect();
            }
        }
    } else {
        let target = cfg.max_pool_size.unwrap_or(0);
        let budget = (target as u64).saturating_mul(400).max(100_000).min(total);
        let offsets: Vec<u64> = spaces
            .iter()
            .scan(0u64, |acc, s| {
                let start = *acc;
                *acc += s.size;
                Some(start)
            })
            .collect();
        let mut seen = HashSet::new();
        let mut hits: Vec<(u64, usize, EventRepresentation)> = Vec::new();
        let mut attempts = 0u64;
        while hits.len() < target && attempts < budget {
            attempts += 1;
            let g = rng.random_range(0..total);
            if !seen.insert(g) {
                continue;
            }
            let ti = offsets.partition_point(|o| *o <= g) - 1;
            if let Some(e) = spaces[ti].decode(g - offsets[ti]) {
                if cfg.constraint.matches(&e) {
                    hits.push((g, ti, e));
                }
            }
        }
        if hits.len() < target {
            warnings.push(format!("sampling budget exhausted: {} of {} events", hits.len(), target));
        }
        hits.sort_by_key(|h| h.0);
        selected = hits.into_iter().map(|(_, ti, e)| (ti, e)).collect();
        mode = PoolMode::Sampled { attempts };
    }

    let mut per_template: Vec<TemplateCount> = spaces
        .iter()
        .map(|s| TemplateCount { template: s.template.to_string(), space: s.size, selected: 0 })
        .collect();
    for (ti, _) in &selected {
        per_template[*ti].selected += 1;
    }
    let mut events = dedupe(selected.into_iter().map(|(_, e)| e).collect());
    for (i, e) in events.iter_mut().enumerate() {
        e.id = i as u64;
    }
    if events.is_empty() {
        warnings.push("constraint admits no events: pool is empty".to_string());
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(EventPool {
        manifest: PoolManifest { config_hash: cfg.hash(), size: events.len(), mode, per_template, warnings },
        events,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::validate_event;

    fn small_cfg() -> GenerationConfig {
        let full = Vocabulary::default_english();
        let keep = ["man", "woman", "sleep"];
        let entries = keep.iter().map(|n| full.entry(full.id(n)).unwrap().clone()).collect();
        let mut cfg = GenerationConfig::new(Vocabulary::new(entries).unwrap());
        cfg.domains.voices = vec![Voice::Active];
        cfg
    }

    #[test]
    fn intransitive_space_counts_cross_product() {
        let cfg = small_cfg();
        let events: Vec<_> =
            populate(StructuralTemplate::simple(Transitivity::Intransitive), &PartialEvent::wildcard(), &cfg)
                .unwrap()
                .collect();
        assert_eq!(events.len(), 2 * 2 * 2 * 2 * 2);
        assert!(events.iter().all(|e| validate_event(e, &cfg.vocabulary).is_ok()));
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let cfg = small_cfg();
        let mut p = PartialEvent::wildcard();
        p.set("main.patient.noun", "man", &cfg.vocabulary).unwrap();
        let err = populate(StructuralTemplate::simple(Transitivity::Intransitive), &p, &cfg).err().unwrap();
        assert!(matches!(err, GenerationError::ShapeMismatch { .. }));
    }

    #[test]
    fn dedupe_keeps_first_occurrence() {
        let cfg = small_cfg();
        let events: Vec<_> =
            populate(StructuralTemplate::simple(Transitivity::Intransitive), &PartialEvent::wildcard(), &cfg)
                .unwrap()
                .take(3)
                .collect();
        let mut dup = events.clone();
        dup.push(events[1].clone());
        assert_eq!(dedupe(dup.clone()).len(), 3);
        assert_eq!(dedupe(dedupe(dup.clone())), dedupe(dup));
        assert_eq!(dedupe(vec![events[0].clone(); 5]).len(), 1);
        assert_eq!(dedupe(events.clone()), events);
    }

    #[test]
    fn adverb_sequences_are_ordered_without_repeats() {
        let a = [LemmaId(1), LemmaId(2), LemmaId(3)];
        let seqs = adverb_sequences(&a, 0, 2);
        assert_eq!(seqs.len(), 1 + 3 + 6);
        assert_eq!(adverb_sequences(&a, 1, 2).len(), 9);
        assert!(seqs.iter().all(|s| s.len() < 2 || s[0] != s[1]));
    }
}
