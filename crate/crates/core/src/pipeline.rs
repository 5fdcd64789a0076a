//! Stage orchestration over an output directory of hash-stamped artifacts.
//!
//! Every stage writes its files atomically plus `manifests/<stage>.json`,
//! which records the stage's config hash and the SHA-256 of each output.
//! A stage refuses to run unless the manifests of its upstream stages exist,
//! were produced under the current config, and still match the files on disk.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, StandardNormal};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encoders::{
    bow_encode_all, export_corpus, import_embeddings, seq_encode_all, train_seq_autoencoder,
    train_skipgram, AutoencoderConfig, AutoencoderReport, EmbeddingFileError, EmbeddingTable, EncoderError,
    SentenceVectors, SeqAutoencoder, SkipGramConfig, SkipGramReport,
};
use crate::event::{Constraint, EventRepresentation, LemmaId, ConstraintParseError, KeyPathError, UnknownKeyword, Vocabulary, VocabularyError};
use crate::generator::{adverb_sequences, generate_pool, EventPool, GenerationConfig, GenerationError, PoolManifest};
use crate::hashing::{config_hash, derive_seed, file_hash, sha256_hex, write_atomic};
use crate::prober::{probe_embeddings, run_suite, EncoderInput, ProbeError, ProbeReport, ProbeSpace, SuiteConfig};
use crate::realizer::{sentences_from_jsonl, sentences_to_jsonl, RealizeError, Realizer};
use crate::taskforge::{
    build_task, dataset_to_tsv, instances_from_tsv, pool_configs, probe_inventory, verify_split, DatasetManifest, Split,
    SplitPolicy, SplitVerdict, TaskDataset, TaskError, TaskKind, TaskSizes,
};
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Generate,
    BuildTasks,
    TrainEncoders,
    Embed,
    Probe,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 6] =
        [Stage::Generate, Stage::BuildTasks, Stage::TrainEncoders, Stage::Embed, Stage::Probe, Stage::Report];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Generate => "generate",
            Stage::BuildTasks => "build-tasks",
            Stage::TrainEncoders => "train-encoders",
            Stage::Embed => "embed",
            Stage::Probe => "probe",
            Stage::Report => "report",
        }
    }

    /// Stages whose outputs this stage reads, nearest first.
    pub fn upstream(self) -> &'static [Stage] {
        match self {
            Stage::Generate => &[],
            Stage::BuildTasks => &[Stage::Generate],
            Stage::TrainEncoders => &[Stage::BuildTasks],
            Stage::Embed => &[Stage::TrainEncoders, Stage::BuildTasks],
            Stage::Probe => &[Stage::Embed, Stage::TrainEncoders, Stage::BuildTasks],
            Stage::Report => &[Stage::Probe, Stage::TrainEncoders, Stage::BuildTasks],
        }
    }

    pub fn manifest_path(self) -> PathBuf {
        PathBuf::from("manifests").join(format!("{}.json", self.as_str()))
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = UnknownKeyword;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| UnknownKeyword { kind: "stage", value: s.to_string() })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskConfig {
    pub train: usize,
    pub test: usize,
    /// Events generated per task pool before dataset assembly.
    pub pool_size: usize,
    pub held_out_pair_fraction: f64,
    pub held_out_adverbs: usize,
}

impl Default for TaskConfig {
    fn default() -> Self {
        TaskConfig { train: 4000, test: 1000, pool_size: 40_000, held_out_pair_fraction: 0.2, held_out_adverbs: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    /// Sentences in the encoder training corpus.
    pub size: usize,
    /// Longest adverb sequence per clause in the corpus.
    pub max_adverbs: usize,
    /// Sentences carrying a form seen fewer times than this are taken first.
    pub min_form_count: usize,
    /// Log-scale spread of the seeded lemma frequencies and verb-argument
    /// affinities that weight corpus sampling; 0 samples uniformly.
    pub preference_spread: f64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig { size: 50_000, max_adverbs: 1, min_form_count: 60, preference_spread: 1.0 }
    }
}

/// An externally produced sentence-vector file to probe alongside the built-in encoders.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImportSpec {
    pub name: String,
    pub path: PathBuf,
}

/// Everything a full reproduction needs. Component seeds are derived from `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    /// Lemma inventory file; the built-in English inventory when absent.
    pub vocabulary: Option<PathBuf>,
    /// Extra constraint file per task name, conjoined with the task's recipe.
    pub constraints: BTreeMap<String, PathBuf>,
    pub tasks: TaskConfig,
    pub corpus: CorpusConfig,
    pub skipgram: SkipGramConfig,
    pub autoencoder: AutoencoderConfig,
    pub probe: SuiteConfig,
    pub imports: Vec<ImportSpec>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 1,
            vocabulary: None,
            constraints: BTreeMap::new(),
            tasks: TaskConfig::default(),
            corpus: CorpusConfig::default(),
            skipgram: SkipGramConfig::default(),
            autoencoder: AutoencoderConfig::default(),
            probe: SuiteConfig::default(),
            imports: Vec::new(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("missing input `{}`: run `{stage}` first", path.display())]
    MissingInput { path: PathBuf, stage: Stage },
    #[error("hash mismatch for `{}`: expected {expected}, found {found}", path.display())]
    HashMismatch { path: PathBuf, expected: String, found: String },
    #[error("io error on `{}`: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config: {0}")]
    Config(String),
    #[error("`{}`: {message}", path.display())]
    Parse { path: PathBuf, message: String },
    #[error(transparent)]
    Vocabulary(#[from] VocabularyError),
    #[error("constraint file `{}`: {source}", path.display())]
    Constraint { path: PathBuf, source: ConstraintParseError },
    #[error("constraint for {task}: {source}")]
    ConstraintConflict { task: TaskKind, source: KeyPathError },
    #[error(transparent)]
    Generation(#[from] GenerationError),
    #[error(transparent)]
    Realize(#[from] RealizeError),
    #[error(transparent)]
    Task(#[from] TaskError),
    #[error("{task}: split verification failed: {failures}")]
    SplitImpure { task: TaskKind, failures: String },
    #[error("encoder corpus: {available} sentences available after excluding test strings, {needed} needed")]
    CorpusTooSmall { needed: usize, available: usize },
    #[error(transparent)]
    Encoder(#[from] EncoderError),
    #[error("embedding file `{}`: {source}", path.display())]
    EmbeddingFile { path: PathBuf, source: EmbeddingFileError },
    #[error(transparent)]
    Probe(#[from] ProbeError),
}

impl PipelineConfig {
    /// Parses TOML; relative paths resolve against `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self, PipelineError> {
        let mut cfg: PipelineConfig = toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(v) = cfg.vocabulary.as_mut() {
            resolve(v);
        }
        cfg.constraints.values_mut().for_each(resolve);
        cfg.imports.iter_mut().for_each(|i| resolve(&mut i.path));
        for task in cfg.constraints.keys() {
            task.parse::<TaskKind>().map_err(|e| PipelineError::Config(e.to_string()))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = read(path)?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn sizes(&self) -> TaskSizes {
        TaskSizes { train: self.tasks.train, test: self.tasks.test }
    }

    pub fn vocabulary(&self) -> Result<Vocabulary, PipelineError> {
        match &self.vocabulary {
            None => Ok(Vocabulary::default_english()),
            Some(p) => Ok(Vocabulary::parse(&read(p)?)?),
        }
    }

    pub fn split_policy(&self, vocab: &Vocabulary) -> SplitPolicy {
        SplitPolicy::sample(
            vocab,
            self.tasks.held_out_pair_fraction,
            self.tasks.held_out_adverbs,
            derive_seed(self.seed, "holdout"),
        )
    }

    pub fn skipgram_config(&self) -> SkipGramConfig {
        SkipGramConfig { seed: derive_seed(self.seed, "skipgram"), ..self.skipgram.clone() }
    }

    pub fn autoencoder_config(&self) -> AutoencoderConfig {
        AutoencoderConfig { seed: derive_seed(self.seed, "autoencoder"), ..self.autoencoder.clone() }
    }

    pub fn suite_config(&self) -> SuiteConfig {
        SuiteConfig { seed: derive_seed(self.seed, "probe"), ..self.probe.clone() }
    }

    /// Generation recipes per task, with any extra constraint file conjoined.
    pub fn task_pool_configs(&self, vocab: &Vocabulary) -> Result<Vec<(TaskKind, Vec<GenerationConfig>)>, PipelineError> {
        let policy = self.split_policy(vocab);
        let mut out = Vec::new();
        for task in TaskKind::ALL {
            let mut configs = pool_configs(task, vocab, &policy, self.tasks.pool_size, self.seed);
            if let Some(path) = self.constraints.get(task.as_str()) {
                let extra = Constraint::parse(&read(path)?, vocab)
                    .map_err(|source| PipelineError::Constraint { path: path.clone(), source })?;
                for c in configs.iter_mut() {
                    c.constraint = c
                        .constraint
                        .clone()
                        .merge(&extra, vocab)
                        .map_err(|source| PipelineError::ConstraintConflict { task, source })?;
                }
            }
            out.push((task, configs));
        }
        Ok(out)
    }

    /// Broad recipe for the encoder training corpus, oversampled to survive filtering.
    pub fn corpus_generation_config(&self, vocab: &Vocabulary) -> GenerationConfig {
        let mut cfg = GenerationConfig::new(vocab.clone());
        cfg.domains.adverb_sequences = adverb_sequences(&vocab.adverbs(), 0, self.corpus.max_adverbs);
        cfg.max_pool_size = Some(self.corpus.size * 3);
        cfg.seed = derive_seed(self.seed, "corpus");
        cfg
    }

    /// Hash of everything `stage` depends on, upstream stages included.
    pub fn stage_hash(&self, stage: Stage) -> Result<String, PipelineError> {
        let parents: Vec<String> = stage.upstream().iter().map(|s| self.stage_hash(*s)).collect::<Result<_, _>>()?;
        let own = match stage {
            Stage::Generate => {
                let vocab = self.vocabulary()?;
                let pools = self.task_pool_configs(&vocab)?;
                let hashes: Vec<(TaskKind, Vec<String>)> =
                    pools.iter().map(|(t, cs)| (*t, cs.iter().map(GenerationConfig::hash).collect())).collect();
                config_hash(&(self.seed, hashes))
            }
            Stage::BuildTasks => config_hash(&(self.seed, &self.tasks)),
            Stage::TrainEncoders => {
                config_hash(&(&self.corpus, self.skipgram_config(), self.autoencoder_config()))
            }
            Stage::Embed => {
                let mut imports = Vec::new();
                for i in &self.imports {
                    imports.push((i.name.clone(), file_hash(&i.path).map_err(|e| io_err(&i.path, e))?));
                }
                config_hash(&imports)
            }
            Stage::Probe => config_hash(&self.suite_config()),
            Stage::Report => config_hash(&"report-v1"),
        };
        Ok(config_hash(&(stage, own, parents)))
    }
}

fn io_err(path: &Path, source: std::io::Error) -> PipelineError {
    PipelineError::Io { path: path.to_path_buf(), source }
}

fn read(path: &Path) -> Result<String, PipelineError> {
    std::fs::read_to_string(path).map_err(|e| io_err(path, e))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageManifest {
    pub stage: Stage,
    pub config_hash: String,
    /// Upstream manifest hashes.
    pub inputs: BTreeMap<String, String>,
    /// Output path (relative to the run directory) to SHA-256.
    pub outputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone)]
pub struct StageOutcome {
    pub manifest: StageManifest,
    pub elapsed: Duration,
}

/// Output directory of one pipeline run.
#[derive(Debug, Clone)]
pub struct Workspace {
    pub root: PathBuf,
}

impl Workspace {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Workspace { root: root.into() }
    }

    pub fn path(&self, rel: impl AsRef<Path>) -> PathBuf {
        self.root.join(rel)
    }

    pub fn read(&self, rel: impl AsRef<Path>) -> Result<String, PipelineError> {
        read(&self.path(rel))
    }

    pub fn manifest(&self, stage: Stage) -> Result<StageManifest, PipelineError> {
        let path = self.path(stage.manifest_path());
        if !path.exists() {
            return Err(PipelineError::MissingInput { path, stage });
        }
        let text = read(&path)?;
        serde_json::from_str(&text).map_err(|e| PipelineError::Parse { path, message: e.to_string() })
    }

    /// Checks an upstream stage's manifest against the config and the files on disk.
    fn verify(&self, stage: Stage, cfg: &PipelineConfig) -> Result<String, PipelineError> {
        let manifest = self.manifest(stage)?;
        let expected = cfg.stage_hash(stage)?;
        if manifest.config_hash != expected {
            return Err(PipelineError::HashMismatch {
                path: self.path(stage.manifest_path()),
                expected,
                found: manifest.config_hash,
            });
        }
        for (rel, hash) in &manifest.outputs {
            let path = self.path(rel);
            if !path.exists() {
                return Err(PipelineError::MissingInput { path, stage });
            }
            let found = file_hash(&path).map_err(|e| io_err(&path, e))?;
            if &found != hash {
                return Err(PipelineError::HashMismatch { path, expected: hash.clone(), found });
            }
        }
        let text = self.read(stage.manifest_path())?;
        Ok(sha256_hex(text.as_bytes()))
    }
}

/// Collects a stage's outputs, writing each atomically.
struct Outputs<'a> {
    ws: &'a Workspace,
    hashes: BTreeMap<String, String>,
}

impl<'a> Outputs<'a> {
    fn new(ws: &'a Workspace) -> Self {
        Outputs { ws, hashes: BTreeMap::new() }
    }

    fn write(&mut self, rel: &str, contents: &str) -> Result<(), PipelineError> {
        let path = self.ws.path(rel);
        write_atomic(&path, contents.as_bytes()).map_err(|e| io_err(&path, e))?;
        self.hashes.insert(rel.to_string(), sha256_hex(contents.as_bytes()));
        Ok(())
    }
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn parse_json<T: serde::de::DeserializeOwned>(ws: &Workspace, rel: &str) -> Result<T, PipelineError> {
    let text = ws.read(rel)?;
    serde_json::from_str(&text).map_err(|e| PipelineError::Parse { path: ws.path(rel), message: e.to_string() })
}

fn pool_file(task: TaskKind, k: usize) -> String {
    format!("pools/{task}-{k}.events")
}

fn task_files(task: TaskKind) -> [String; 3] {
    [format!("tasks/{task}.tsv"), format!("tasks/{task}.sentences.jsonl"), format!("tasks/{task}.manifest.json")]
}

pub const CORPUS_FILE: &str = "encoders/corpus.txt";
pub const SKIPGRAM_FILE: &str = "encoders/skipgram.txt";
pub const SKIPGRAM_REPORT: &str = "encoders/skipgram.json";
pub const AUTOENCODER_FILE: &str = "encoders/autoencoder.txt";
pub const AUTOENCODER_REPORT: &str = "encoders/autoencoder.json";
pub const AUTOENCODER_CURVE: &str = "encoders/autoencoder-curve.csv";
pub const PROBE_REPORT: &str = "report/probe.json";
pub const PROBE_RECORDS: &str = "report/probe.jsonl";
pub const FINAL_REPORT: &str = "report/report.txt";
pub const BOW: &str = "bow";
pub const SEQ: &str = "seq-autoencoder";

pub fn vectors_file(name: &str) -> String {
    format!("vectors/{name}.txt")
}

/// Per-task manifest on disk: the dataset manifest plus its split audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskManifestFile {
    pub dataset: DatasetManifest,
    pub split_verdict: SplitVerdict,
}

/// Reads back a dataset written by `build-tasks`.
pub fn load_dataset(ws: &Workspace, task: TaskKind, vocab: &Vocabulary) -> Result<TaskDataset, PipelineError> {
    let [tsv, sentences, manifest] = task_files(task);
    let instances = instances_from_tsv(&ws.read(&tsv)?, vocab)?;
    let sentences = sentences_from_jsonl(&ws.read(&sentences)?)
        .map_err(|e| PipelineError::Parse { path: ws.path(&sentences), message: e.to_string() })?;
    let file: TaskManifestFile = parse_json(ws, &manifest)?;
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (split, inst) in instances {
        match split {
            Split::Train => train.push(inst),
            Split::Test => test.push(inst),
        }
    }
    Ok(TaskDataset { task, train, test, sentences, manifest: file.dataset })
}

pub fn load_datasets(ws: &Workspace, vocab: &Vocabulary) -> Result<Vec<TaskDataset>, PipelineError> {
    TaskKind::ALL.iter().map(|t| load_dataset(ws, *t, vocab)).collect()
}

/// Seeded log-normal lemma frequencies and verb-argument affinities. Weighting
/// the corpus by them gives lemmas of the same class distinct distributions,
/// as in natural text; under uniform sampling they are interchangeable and
/// skip-gram cannot tell them apart.
#[derive(Debug, Clone)]
pub struct LexicalPreferences {
    frequency: BTreeMap<LemmaId, f64>,
    affinity: BTreeMap<(LemmaId, LemmaId), f64>,
}

impl LexicalPreferences {
    pub fn sample(vocab: &Vocabulary, spread: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = || {
            let z: f64 = StandardNormal.sample(&mut rng);
            spread * z
        };
        let frequency = vocab.ids().map(|l| (l, draw())).collect();
        let mut affinity = BTreeMap::new();
        for v in vocab.verbs() {
            for other in vocab.nouns().into_iter().chain(vocab.adverbs()) {
                affinity.insert((v, other), draw());
            }
        }
        LexicalPreferences { frequency, affinity }
    }

    /// Sampling weight of an event: lemma frequencies times the affinities of
    /// each verb with its arguments and adverbs.
    pub fn weight(&self, event: &EventRepresentation) -> f64 {
        let mut log_w: f64 = event.lemmas().iter().map(|l| self.frequency.get(l).copied().unwrap_or(0.0)).sum();
        for (_, c) in event.clauses() {
            let partners = std::iter::once(c.agent.noun).chain(c.patient.as_ref().map(|p| p.noun)).chain(c.features.adverbs.iter().copied());
            for other in partners {
                log_w += self.affinity.get(&(c.verb, other)).copied().unwrap_or(0.0);
            }
        }
        log_w.exp()
    }
}

/// Broad-constraint sentences for encoder training, none of which matches a
/// test sentence of any task by surface string. A first pass over the shuffled
/// candidates takes sentences containing a form still below
/// `min_form_count`; the rest of the corpus is filled in shuffled order.
pub fn encoder_corpus(
    cfg: &PipelineConfig,
    vocab: &Vocabulary,
    datasets: &[TaskDataset],
) -> Result<Vec<Vec<String>>, PipelineError> {
    let mut excluded = BTreeSet::new();
    for ds in datasets {
        for inst in &ds.test {
            if let Some(s) = ds.sentence(inst.sentence_id) {
                excluded.insert(s.text());
            }
        }
    }
    let realizer = Realizer::new(vocab)?;
    let pool = generate_pool(&cfg.corpus_generation_config(vocab))?;
    let prefs = LexicalPreferences::sample(vocab, cfg.corpus.preference_spread, derive_seed(cfg.seed, "corpus-preferences"));
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, "corpus-order"));
    // weighted order without replacement: sort by ln(u) / w, largest first
    let mut keyed: Vec<(f64, usize)> = pool
        .events
        .iter()
        .enumerate()
        .map(|(i, e)| (rng.random::<f64>().ln() / prefs.weight(e), i))
        .collect();
    keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let ordered: Vec<_> = keyed.iter().map(|(_, i)| pool.events[*i].clone()).collect();
    let sentences = realizer.realize_all(&ordered)?;
    let mut seen = BTreeSet::new();
    let candidates: Vec<Vec<String>> =
        sentences.into_iter().filter(|s| !excluded.contains(&s.text()) && seen.insert(s.text())).map(|s| s.tokens).collect();
    if candidates.len() < cfg.corpus.size {
        return Err(PipelineError::CorpusTooSmall { needed: cfg.corpus.size, available: candidates.len() });
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    let mut taken = vec![false; candidates.len()];
    let mut total = 0;
    for (i, s) in candidates.iter().enumerate() {
        if total == cfg.corpus.size {
            break;
        }
        if s.iter().any(|t| counts.get(t.as_str()).copied().unwrap_or(0) < cfg.corpus.min_form_count) {
            for t in s {
                *counts.entry(t).or_default() += 1;
            }
            taken[i] = true;
            total += 1;
        }
    }
    for t in taken.iter_mut() {
        if total == cfg.corpus.size {
            break;
        }
        if !*t {
            *t = true;
            total += 1;
        }
    }
    Ok(candidates.into_iter().zip(taken).filter(|(_, t)| *t).map(|(s, _)| s).collect())
}

fn all_sentences(datasets: &[TaskDataset]) -> Vec<(u64, Vec<String>)> {
    let mut out: Vec<(u64, Vec<String>)> =
        datasets.iter().flat_map(|d| d.sentences.iter().map(|s| (s.id, s.tokens.clone()))).collect();
    out.sort_by_key(|s| s.0);
    out
}

fn vectors_from(ws: &Workspace, name: &str) -> Result<SentenceVectors<Real>, PipelineError> {
    let rel = vectors_file(name);
    SentenceVectors::from_text(name, &ws.read(&rel)?)
        .map_err(|source| PipelineError::EmbeddingFile { path: ws.path(&rel), source })
}

fn skipgram_table(ws: &Workspace) -> Result<EmbeddingTable<Real>, PipelineError> {
    EmbeddingTable::from_text(&ws.read(SKIPGRAM_FILE)?)
        .map_err(|source| PipelineError::EmbeddingFile { path: ws.path(SKIPGRAM_FILE), source })
}

fn encoder_names(cfg: &PipelineConfig) -> Vec<String> {
    let mut names = vec![BOW.to_string(), SEQ.to_string()];
    names.extend(cfg.imports.iter().map(|i| i.name.clone()));
    names
}

fn stage_generate(cfg: &PipelineConfig, out: &mut Outputs) -> Result<(), PipelineError> {
    let vocab = cfg.vocabulary()?;
    let mut manifests: BTreeMap<String, PoolManifest> = BTreeMap::new();
    for (task, configs) in cfg.task_pool_configs(&vocab)? {
        for (k, gc) in configs.iter().enumerate() {
            log::info!("generate {task} pool {k}");
            let pool = generate_pool(gc)?;
            for w in &pool.manifest.warnings {
                log::warn!("{task} pool {k}: {w}");
            }
            let rel = pool_file(task, k);
            out.write(&rel, &pool.to_text(&vocab))?;
            manifests.insert(rel, pool.manifest);
        }
    }
    out.write("pools/manifest.json", &json(&manifests))
}

fn stage_build_tasks(cfg: &PipelineConfig, ws: &Workspace, gen: &StageManifest, out: &mut Outputs) -> Result<(), PipelineError> {
    let vocab = cfg.vocabulary()?;
    let realizer = Realizer::new(&vocab)?;
    let policy = cfg.split_policy(&vocab);
    for task in TaskKind::ALL {
        let mut pool = Vec::new();
        for rel in gen.outputs.keys().filter(|r| r.starts_with(&format!("pools/{task}-"))) {
            pool.extend(EventPool::events_from_text(&ws.read(rel)?, &vocab)?);
        }
        log::info!("build {task} from {} events", pool.len());
        let ds = build_task(task, &pool, &realizer, &policy, cfg.sizes(), derive_seed(cfg.seed, task.as_str()))?;
        let verdict = verify_split(&ds, &policy);
        if !verdict.passed() {
            let failures = verdict.failures.iter().take(5).map(|f| format!("{f:?}")).collect::<Vec<_>>().join("; ");
            return Err(PipelineError::SplitImpure { task, failures });
        }
        let [tsv, sentences, manifest] = task_files(task);
        out.write(&tsv, &dataset_to_tsv(&ds, &vocab))?;
        out.write(&sentences, &sentences_to_jsonl(&ds.sentences))?;
        out.write(&manifest, &json(&TaskManifestFile { dataset: ds.manifest.clone(), split_verdict: verdict }))?;
    }
    Ok(())
}

fn stage_train_encoders(cfg: &PipelineConfig, ws: &Workspace, out: &mut Outputs) -> Result<(), PipelineError> {
    let vocab = cfg.vocabulary()?;
    let datasets = load_datasets(ws, &vocab)?;
    let corpus = encoder_corpus(cfg, &vocab, &datasets)?;
    out.write(CORPUS_FILE, &export_corpus(&corpus))?;
    log::info!("skip-gram on {} sentences", corpus.len());
    let (table, sg_report): (EmbeddingTable<Real>, SkipGramReport) = train_skipgram(&corpus, &cfg.skipgram_config())?;
    out.write(SKIPGRAM_FILE, &table.to_text())?;
    out.write(SKIPGRAM_REPORT, &json(&sg_report))?;
    log::info!("sequence autoencoder on {} sentences", corpus.len());
    let (model, ae_report): (SeqAutoencoder<Real>, AutoencoderReport) =
        train_seq_autoencoder(&corpus, &cfg.autoencoder_config())?;
    out.write(AUTOENCODER_FILE, &model.to_text())?;
    out.write(AUTOENCODER_REPORT, &json(&ae_report))?;
    out.write(AUTOENCODER_CURVE, &ae_report.curve_csv())
}

fn stage_embed(cfg: &PipelineConfig, ws: &Workspace, out: &mut Outputs) -> Result<(), PipelineError> {
    let vocab = cfg.vocabulary()?;
    let sentences = all_sentences(&load_datasets(ws, &vocab)?);
    let table = skipgram_table(ws)?;
    out.write(&vectors_file(BOW), &bow_encode_all(&sentences, &table)?.to_text())?;
    let model = SeqAutoencoder::<Real>::from_text(&ws.read(AUTOENCODER_FILE)?)
        .map_err(|source| PipelineError::EmbeddingFile { path: ws.path(AUTOENCODER_FILE), source })?;
    out.write(&vectors_file(SEQ), &seq_encode_all(&sentences, &model)?.to_text())?;
    for import in &cfg.imports {
        let vectors: SentenceVectors<Real> = import_embeddings(&import.name, &read(&import.path)?)
            .map_err(|source| PipelineError::EmbeddingFile { path: import.path.clone(), source })?;
        out.write(&vectors_file(&import.name), &vectors.to_text())?;
    }
    Ok(())
}

fn stage_probe(cfg: &PipelineConfig, ws: &Workspace, upstream: &BTreeMap<String, String>, out: &mut Outputs) -> Result<(), PipelineError> {
    let vocab = cfg.vocabulary()?;
    let datasets = load_datasets(ws, &vocab)?;
    let realizer = Realizer::new(&vocab)?;
    let inventory = probe_inventory(&vocab);
    let embeddings = probe_embeddings(&inventory, &skipgram_table(ws)?, realizer.lexicon())?;
    let probes = ProbeSpace { inventory, embeddings: Some(embeddings) };
    let mut encoders = Vec::new();
    for name in encoder_names(cfg) {
        let vectors = vectors_from(ws, &name)?;
        let hash = sha256_hex(ws.read(vectors_file(&name))?.as_bytes());
        encoders.push(EncoderInput { name, vectors, hash });
    }
    let report = run_suite(&datasets, &encoders, &probes, &cfg.suite_config(), upstream.clone());
    out.write(PROBE_REPORT, &json(&report))?;
    out.write(PROBE_RECORDS, &report.to_jsonl())
}

/// Human-readable summary of a finished run.
pub fn render_report(
    report: &ProbeReport,
    datasets: &[(TaskKind, TaskManifestFile)],
    autoencoder: &AutoencoderReport,
) -> String {
    let mut out = String::from("# Probing results (test accuracy, %, mean ±half-range over seeds)\n");
    out.push_str(&report.render_grid());
    let failed: Vec<&crate::prober::CellResult> = report.cells.iter().filter(|c| !c.succeeded()).collect();
    if !failed.is_empty() {
        out.push_str("\n# Failed cells\n");
        for c in failed {
            out.push_str(&format!("{} {} {}: {}\n", c.encoder, c.task, c.mode, c.error.as_deref().unwrap_or("")));
        }
    }
    out.push_str("\n# Datasets\n");
    for (task, m) in datasets {
        out.push_str(&format!(
            "{task}: {}/{} instances, positive {:.3}/{:.3}, max lemma divergence {:.4}, split {}\n",
            m.dataset.train_size,
            m.dataset.test_size,
            m.dataset.train_positive_ratio,
            m.dataset.test_positive_ratio,
            m.dataset.balance.max_divergence(),
            if m.split_verdict.passed() { "clean" } else { "IMPURE" }
        ));
    }
    out.push_str(&format!(
        "\n# Sequence autoencoder\nbest epoch {}, held-out reconstruction {:.4}\n",
        autoencoder.best_epoch, autoencoder.reconstruction_accuracy
    ));
    out
}

fn stage_report(ws: &Workspace, out: &mut Outputs) -> Result<(), PipelineError> {
    let report: ProbeReport = parse_json(ws, PROBE_REPORT)?;
    let autoencoder: AutoencoderReport = parse_json(ws, AUTOENCODER_REPORT)?;
    let mut datasets = Vec::new();
    for task in TaskKind::ALL {
        datasets.push((task, parse_json(ws, &task_files(task)[2])?));
    }
    out.write(FINAL_REPORT, &render_report(&report, &datasets, &autoencoder))
}

/// Runs one stage after verifying its upstream manifests.
pub fn run_stage(stage: Stage, cfg: &PipelineConfig, ws: &Workspace) -> Result<StageOutcome, PipelineError> {
    let start = Instant::now();
    let mut inputs = BTreeMap::new();
    for up in stage.upstream() {
        inputs.insert(up.as_str().to_string(), ws.verify(*up, cfg)?);
    }
    let mut out = Outputs::new(ws);
    match stage {
        Stage::Generate => stage_generate(cfg, &mut out)?,
        Stage::BuildTasks => stage_build_tasks(cfg, ws, &ws.manifest(Stage::Generate)?, &mut out)?,
        Stage::TrainEncoders => stage_train_encoders(cfg, ws, &mut out)?,
        Stage::Embed => stage_embed(cfg, ws, &mut out)?,
        Stage::Probe => stage_probe(cfg, ws, &inputs, &mut out)?,
        Stage::Report => stage_report(ws, &mut out)?,
    }
    let manifest = StageManifest { stage, config_hash: cfg.stage_hash(stage)?, inputs, outputs: out.hashes };
    let path = ws.path(stage.manifest_path());
    write_atomic(&path, json(&manifest).as_bytes()).map_err(|e| io_err(&path, e))?;
    let elapsed = start.elapsed();
    log::info!("stage {stage} done in {:.1}s", elapsed.as_secs_f64());
    Ok(StageOutcome { manifest, elapsed })
}

/// Every stage in order.
pub fn run_all(cfg: &PipelineConfig, ws: &Workspace) -> Result<Vec<StageOutcome>, PipelineError> {
    Stage::ALL.iter().map(|s| run_stage(*s, cfg, ws)).collect()
}
