//! Probing classifier: feature assembly, a one-hidden-layer ReLU MLP, and the
//! task × encoder × mode grid with random-vector controls.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use ndarray::{s, Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::encoders::{random_vector, EmbeddingTable, SentenceVectors};
use crate::event::{LemmaId, UnknownKeyword};
use crate::hashing::{config_hash, derive_seed};
use crate::optim::Adam;
use crate::realizer::InflectionLexicon;
use crate::taskforge::{Split, TaskDataset, TaskKind};
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProbeError {
    #[error("no sentence vector for id {0}")]
    MissingVector(u64),
    #[error("probe lemma {0:?} is not in the probe inventory")]
    UnknownLemma(LemmaId),
    #[error("no embedding for probe lemma `{0}`")]
    MissingProbeEmbedding(String),
    #[error("embedding-probe mode needs probe embeddings")]
    NoProbeEmbeddings,
    #[error("training labels contain a single class")]
    DegenerateLabels,
    #[error("feature width {found} does not match classifier input width {expected}")]
    WidthMismatch { expected: usize, found: usize },
    #[error("test-split features passed to training")]
    TestSplitAccess,
    #[error("empty feature set")]
    Empty,
}

/// How the classifier input is built from an instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureMode {
    OnehotProbe,
    EmbeddingProbe,
    RandomSentence,
    RandomProbe,
}

impl FeatureMode {
    pub const ALL: [FeatureMode; 4] =
        [FeatureMode::OnehotProbe, FeatureMode::EmbeddingProbe, FeatureMode::RandomSentence, FeatureMode::RandomProbe];

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureMode::OnehotProbe => "onehot-probe",
            FeatureMode::EmbeddingProbe => "embedding-probe",
            FeatureMode::RandomSentence => "random-sentence",
            FeatureMode::RandomProbe => "random-probe",
        }
    }
}

impl fmt::Display for FeatureMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureMode {
    type Err = UnknownKeyword;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FeatureMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| UnknownKeyword { kind: "feature mode", value: s.to_string() })
    }
}

/// Probe lemma inventory plus optional word-embedding rows for each lemma.
#[derive(Debug, Clone)]
pub struct ProbeSpace<F: Scalar> {
    pub inventory: Vec<LemmaId>,
    /// One row per inventory lemma, same order.
    pub embeddings: Option<Array2<F>>,
}

impl<F: Scalar> ProbeSpace<F> {
    pub fn onehot(inventory: Vec<LemmaId>) -> Self {
        ProbeSpace { inventory, embeddings: None }
    }

    pub fn slot(&self, lemma: LemmaId) -> Result<usize, ProbeError> {
        self.inventory.iter().position(|l| *l == lemma).ok_or(ProbeError::UnknownLemma(lemma))
    }

    pub fn block_width(&self, mode: FeatureMode) -> Result<usize, ProbeError> {
        match mode {
            FeatureMode::EmbeddingProbe => self.embeddings.as_ref().map(|e| e.ncols()).ok_or(ProbeError::NoProbeEmbeddings),
            _ => Ok(self.inventory.len()),
        }
    }
}

/// Word-embedding probe rows: the mean of the table vectors of each lemma's inflected forms.
pub fn probe_embeddings<F: Scalar>(
    inventory: &[LemmaId],
    table: &EmbeddingTable<F>,
    lexicon: &InflectionLexicon,
) -> Result<Array2<F>, ProbeError> {
    let mut out = Array2::zeros((inventory.len(), table.dim()));
    for (i, lemma) in inventory.iter().enumerate() {
        let rows: Vec<_> = lexicon.forms(*lemma).iter().filter_map(|f| table.get(f)).collect();
        if rows.is_empty() {
            let name = lexicon.forms(*lemma).first().cloned().unwrap_or_else(|| format!("{lemma:?}"));
            return Err(ProbeError::MissingProbeEmbedding(name));
        }
        let mut row = out.row_mut(i);
        for r in &rows {
            row += r;
        }
        row /= F::of(rows.len() as f64);
    }
    Ok(out)
}

/// Classifier inputs for one split of one task.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet<F: Scalar> {
    pub task: TaskKind,
    pub split: Split,
    pub mode: FeatureMode,
    pub x: Array2<F>,
    pub y: Vec<u8>,
    /// Rows sharing a group id (a sentence and its mirror) are never split
    /// between the fitting and development slices.
    pub groups: Vec<usize>,
}

impl<F: Scalar> FeatureSet<F> {
    /// Every row in its own group.
    pub fn ungrouped(task: TaskKind, split: Split, mode: FeatureMode, x: Array2<F>, y: Vec<u8>) -> Self {
        let groups = (0..y.len()).collect();
        FeatureSet { task, split, mode, x, y, groups }
    }

    pub fn width(&self) -> usize {
        self.x.ncols()
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

/// Lays out `[sentence | probe1 | probe2?]` for every instance of `split`.
/// Random modes draw their block from `(task, split, instance, slot, seed)`,
/// so the same seed reproduces the same arrays.
pub fn assemble_features<F: Scalar>(
    ds: &TaskDataset,
    split: Split,
    vectors: &SentenceVectors<F>,
    probes: &ProbeSpace<F>,
    mode: FeatureMode,
    seed: u64,
) -> Result<FeatureSet<F>, ProbeError> {
    let instances = ds.split(split);
    let d = vectors.dim();
    let block = probes.block_width(mode)?;
    let arity = ds.task.arity();
    let mut x = Array2::zeros((instances.len(), d + arity * block));
    let mut y = Vec::with_capacity(instances.len());
    // mirrors share their token multiset and probes
    let mut group_of: BTreeMap<(Vec<&str>, &[LemmaId]), usize> = BTreeMap::new();
    let mut groups = Vec::with_capacity(instances.len());
    for (i, inst) in instances.iter().enumerate() {
        let mut bag: Vec<&str> = match ds.sentence(inst.sentence_id) {
            Some(s) => s.tokens.iter().map(String::as_str).collect(),
            None => return Err(ProbeError::MissingVector(inst.sentence_id)),
        };
        bag.sort_unstable();
        let next = group_of.len();
        groups.push(*group_of.entry((bag, &inst.probes)).or_insert(next));
        let mut row = x.row_mut(i);
        match mode {
            FeatureMode::RandomSentence => {
                row.slice_mut(s![..d]).assign(&random_vector::<F>(inst.sentence_id, d, derive_seed(seed, "sentence")));
            }
            _ => {
                let v = vectors.get(inst.sentence_id).ok_or(ProbeError::MissingVector(inst.sentence_id))?;
                row.slice_mut(s![..d]).assign(&v);
            }
        }
        for (k, lemma) in inst.probes.iter().enumerate() {
            let slot = probes.slot(*lemma)?;
            let mut cell = row.slice_mut(s![d + k * block..d + (k + 1) * block]);
            match mode {
                FeatureMode::OnehotProbe | FeatureMode::RandomSentence => cell[slot] = F::one(),
                FeatureMode::EmbeddingProbe => {
                    cell.assign(&probes.embeddings.as_ref().expect("checked by block_width").row(slot))
                }
                FeatureMode::RandomProbe => {
                    let key = format!("{}/{}/{i}/{k}", ds.task, split.as_str());
                    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &key));
                    cell.mapv_inplace(|_| F::of(StandardNormal.sample(&mut rng)));
                }
            }
        }
        y.push(inst.label);
    }
    Ok(FeatureSet { task: ds.task, split, mode, x, y, groups })
}

pub const W1: usize = 0;
pub const B1: usize = 1;
pub const W2: usize = 2;
pub const B2: usize = 3;

/// One hidden ReLU layer as wide as the input, then a 2-way softmax.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<F: Scalar> {
    /// `[W1 (in×h), b1 (1×h), W2 (h×2), b2 (1×2)]`.
    pub params: Vec<Array2<F>>,
}

impl<F: Scalar> Mlp<F> {
    pub fn new(input_width: usize, seed: u64) -> Self {
        Self::with_hidden(input_width, input_width, seed)
    }

    pub fn with_hidden(input_width: usize, hidden: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut normal = |rows: usize, cols: usize, scale: f64| {
            Array2::from_shape_simple_fn((rows, cols), || {
                let z: f64 = StandardNormal.sample(&mut rng);
                F::of(z * scale)
            })
        };
        let w1 = normal(input_width, hidden, (2.0 / input_width as f64).sqrt());
        let w2 = normal(hidden, 2, (1.0 / hidden as f64).sqrt());
        Mlp { params: vec![w1, Array2::zeros((1, hidden)), w2, Array2::zeros((1, 2))] }
    }

    pub fn input_width(&self) -> usize {
        self.params[W1].nrows()
    }

    pub fn hidden_width(&self) -> usize {
        self.params[W1].ncols()
    }

    fn hidden_pre(&self, xs: &Array2<F>) -> Array2<F> {
        xs.dot(&self.params[W1]) + &self.params[B1]
    }

    pub fn logits(&self, x: &Array2<F>) -> Array2<F> {
        self.hidden_pre(x).mapv(|v| v.max(F::zero())).dot(&self.params[W2]) + &self.params[B2]
    }

    pub fn predict(&self, x: &Array2<F>) -> Vec<u8> {
        self.logits(x).rows().into_iter().map(|r| u8::from(r[1] > r[0])).collect()
    }

    /// Mean cross-entropy of `x` against `y`.
    pub fn loss(&self, x: &Array2<F>, y: &[u8]) -> f64 {
        let logits = self.logits(x);
        logits.rows().into_iter().zip(y).map(|(r, &t)| cross_entropy(r[0].as_f64(), r[1].as_f64(), t)).sum::<f64>()
            / y.len().max(1) as f64
    }

    /// Mean cross-entropy and its gradient for every parameter.
    pub fn loss_and_grads(&self, x: &Array2<F>, y: &[u8]) -> (f64, Vec<Array2<F>>) {
        let n = y.len().max(1);
        let z1 = self.hidden_pre(x);
        let h = z1.mapv(|v| v.max(F::zero()));
        let logits = h.dot(&self.params[W2]) + &self.params[B2];
        let mut dlogits = Array2::zeros(logits.raw_dim());
        let mut loss = 0.0;
        let inv_n = F::of(1.0 / n as f64);
        for (i, &t) in y.iter().enumerate() {
            let (a, b) = (logits[[i, 0]].as_f64(), logits[[i, 1]].as_f64());
            loss += cross_entropy(a, b, t);
            let p1 = sigmoid(b - a);
            let p = [1.0 - p1, p1];
            for c in 0..2 {
                let target = if usize::from(t) == c { 1.0 } else { 0.0 };
                dlogits[[i, c]] = F::of(p[c] - target) * inv_n;
            }
        }
        let dw2 = h.t().dot(&dlogits);
        let db2 = dlogits.sum_axis(Axis(0)).insert_axis(Axis(0));
        let mut dz1 = dlogits.dot(&self.params[W2].t());
        ndarray::Zip::from(&mut dz1).and(&z1).for_each(|g, &z| {
            if z <= F::zero() {
                *g = F::zero();
            }
        });
        let dw1 = x.t().dot(&dz1);
        let db1 = dz1.sum_axis(Axis(0)).insert_axis(Axis(0));
        (loss / n as f64, vec![dw1, db1, dw2, db2])
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `-log softmax([a, b])[t]`, computed stably.
fn cross_entropy(a: f64, b: f64, t: u8) -> f64 {
    let m = a.max(b);
    let lse = m + ((a - m).exp() + (b - m).exp()).ln();
    lse - if t == 1 { b } else { a }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub dev_fraction: f64,
    pub seed: u64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig { learning_rate: 1e-3, batch_size: 32, max_epochs: 100, patience: 10, dev_fraction: 0.1, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRow {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_loss: f64,
    pub dev_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingCurve {
    pub rows: Vec<EpochRow>,
    pub best_epoch: usize,
}

fn take_rows<F: Scalar>(x: &Array2<F>, y: &[u8], idx: &[usize]) -> (Array2<F>, Vec<u8>) {
    (x.select(Axis(0), idx), idx.iter().map(|&i| y[i]).collect())
}

/// Trains on a seeded 90/10 train/dev partition of `train`, keeping the
/// parameters with the lowest dev loss. Only training-split features are accepted.
/// Draws `fraction` of the groups (at least one) as the development slice;
/// returns `(dev rows, fitting rows)` in row order.
fn dev_split(groups: &[usize], fraction: f64, rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<usize>) {
    let n_groups = groups.iter().max().map_or(0, |g| g + 1);
    let mut order: Vec<usize> = (0..n_groups).collect();
    order.shuffle(rng);
    let n_dev = ((n_groups as f64 * fraction).round() as usize).clamp(1, n_groups.saturating_sub(1).max(1));
    let mut in_dev = vec![false; n_groups];
    for &g in &order[..n_dev.min(n_groups)] {
        in_dev[g] = true;
    }
    (0..groups.len()).partition(|&i| in_dev[groups[i]])
}

pub fn train_classifier<F: Scalar>(train: &FeatureSet<F>, cfg: &ClassifierConfig) -> Result<(Mlp<F>, TrainingCurve), ProbeError> {
    if train.split != Split::Train {
        return Err(ProbeError::TestSplitAccess);
    }
    if train.is_empty() {
        return Err(ProbeError::Empty);
    }
    let positives = train.y.iter().filter(|&&l| l == 1).count();
    if positives == 0 || positives == train.len() {
        return Err(ProbeError::DegenerateLabels);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (dev_idx, mut fit_idx) = dev_split(&train.groups, cfg.dev_fraction, &mut rng);
    if fit_idx.is_empty() || dev_idx.is_empty() {
        return Err(ProbeError::Empty);
    }
    let (dev_x, dev_y) = take_rows(&train.x, &train.y, &dev_idx);

    let mut mlp = Mlp::new(train.width(), derive_seed(cfg.seed, "init"));
    let mut opt = Adam::new(&mlp.params, cfg.learning_rate);
    let mut best = (f64::INFINITY, 0, mlp.params.clone());
    let mut rows = Vec::new();
    for epoch in 1..=cfg.max_epochs {
        fit_idx.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in fit_idx.chunks(cfg.batch_size.max(1)) {
            let (bx, by) = take_rows(&train.x, &train.y, chunk);
            let (loss, grads) = mlp.loss_and_grads(&bx, &by);
            total += loss * chunk.len() as f64;
            opt.step(&mut mlp.params, &grads);
        }
        let dev_loss = mlp.loss(&dev_x, &dev_y);
        let dev_accuracy = accuracy(&mlp.predict(&dev_x), &dev_y);
        rows.push(EpochRow { epoch, train_loss: total / fit_idx.len() as f64, dev_loss, dev_accuracy });
        if dev_loss < best.0 {
            best = (dev_loss, epoch, mlp.params.clone());
        } else if epoch - best.1 >= cfg.patience {
            break;
        }
    }
    mlp.params = best.2;
    Ok((mlp, TrainingCurve { rows, best_epoch: best.1 }))
}

fn accuracy(pred: &[u8], gold: &[u8]) -> f64 {
    pred.iter().zip(gold).filter(|(p, g)| p == g).count() as f64 / gold.len().max(1) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ClassStats {
    pub total: usize,
    pub correct: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub accuracy: f64,
    /// Indexed by gold label.
    pub per_class: [ClassStats; 2],
}

pub fn evaluate<F: Scalar>(mlp: &Mlp<F>, features: &FeatureSet<F>) -> Result<Evaluation, ProbeError> {
    if features.width() != mlp.input_width() {
        return Err(ProbeError::WidthMismatch { expected: mlp.input_width(), found: features.width() });
    }
    if features.is_empty() {
        return Err(ProbeError::Empty);
    }
    let pred = mlp.predict(&features.x);
    let mut per_class = [ClassStats::default(); 2];
    for (p, g) in pred.iter().zip(&features.y) {
        let c = &mut per_class[usize::from(*g)];
        c.total += 1;
        c.correct += usize::from(p == g);
    }
    Ok(Evaluation { accuracy: accuracy(&pred, &features.y), per_class })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuiteConfig {
    pub classifier: ClassifierConfig,
    pub seeds: usize,
    pub modes: Vec<FeatureMode>,
    pub seed: u64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            classifier: ClassifierConfig::default(),
            seeds: 3,
            modes: FeatureMode::ALL.to_vec(),
            seed: 0,
        }
    }
}

/// A named sentence-vector set to probe.
#[derive(Debug, Clone)]
pub struct EncoderInput<F: Scalar> {
    pub name: String,
    pub vectors: SentenceVectors<F>,
    pub hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRun {
    pub seed: u64,
    pub accuracy: f64,
    pub per_class: [ClassStats; 2],
    pub curve: TrainingCurve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub encoder: String,
    pub task: TaskKind,
    pub mode: FeatureMode,
    pub runs: Vec<SeedRun>,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub error: Option<String>,
}

impl CellResult {
    pub fn succeeded(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub config_hash: String,
    pub input_hashes: BTreeMap<String, String>,
    pub cells: Vec<CellResult>,
}

impl ProbeReport {
    pub fn cell(&self, encoder: &str, task: TaskKind, mode: FeatureMode) -> Option<&CellResult> {
        self.cells.iter().find(|c| c.encoder == encoder && c.task == task && c.mode == mode)
    }

    /// Mean test accuracy in percent, if the cell ran.
    pub fn percent(&self, encoder: &str, task: TaskKind, mode: FeatureMode) -> Option<f64> {
        self.cell(encoder, task, mode).filter(|c| c.succeeded()).map(|c| 100.0 * c.mean)
    }

    fn encoders(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for c in &self.cells {
            if !out.contains(&c.encoder.as_str()) {
                out.push(&c.encoder);
            }
        }
        out
    }

    /// One grid per mode: encoders as rows, tasks as columns, `mean ±half-range` in percent.
    pub fn render_grid(&self) -> String {
        let mut out = format!("config {}\n", self.config_hash);
        let mut modes: Vec<FeatureMode> = self.cells.iter().map(|c| c.mode).collect();
        modes.sort();
        modes.dedup();
        let width = self.encoders().iter().map(|e| e.len()).max().unwrap_or(0).max("encoder".len()) + 2;
        for mode in modes {
            out.push_str(&format!("\n[{mode}]\n{:<width$}", "encoder"));
            for t in TaskKind::ALL {
                out.push_str(&format!("{:>16}", t.as_str()));
            }
            out.push('\n');
            for enc in self.encoders() {
                out.push_str(&format!("{enc:<width$}"));
                for t in TaskKind::ALL {
                    let text = match self.cell(enc, t, mode) {
                        None => "-".to_string(),
                        Some(c) if !c.succeeded() => "error".to_string(),
                        Some(c) => format!("{:.1} ±{:.1}", 100.0 * c.mean, 50.0 * (c.max - c.min)),
                    };
                    out.push_str(&format!("{text:>16}"));
                }
                out.push('\n');
            }
        }
        out
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for c in &self.cells {
            out.push_str(&serde_json::to_string(c).expect("cell serializes"));
            out.push('\n');
        }
        out
    }
}

fn run_cell<F: Scalar>(
    ds: &TaskDataset,
    enc: &EncoderInput<F>,
    probes: &ProbeSpace<F>,
    mode: FeatureMode,
    cfg: &SuiteConfig,
) -> Result<Vec<SeedRun>, ProbeError> {
    let mut runs = Vec::with_capacity(cfg.seeds);
    for s in 0..cfg.seeds {
        let cell_seed = derive_seed(cfg.seed, &format!("{}/{}/{mode}/{s}", enc.name, ds.task));
        let feature_seed = derive_seed(cell_seed, "features");
        let train = assemble_features(ds, Split::Train, &enc.vectors, probes, mode, feature_seed)?;
        let ccfg = ClassifierConfig { seed: cell_seed, ..cfg.classifier };
        let (mlp, curve) = train_classifier(&train, &ccfg)?;
        let test = assemble_features(ds, Split::Test, &enc.vectors, probes, mode, feature_seed)?;
        let eval = evaluate(&mlp, &test)?;
        runs.push(SeedRun { seed: cell_seed, accuracy: eval.accuracy, per_class: eval.per_class, curve });
    }
    Ok(runs)
}

/// Runs every (encoder, task, mode) cell. Embedding-probe cells are limited
/// to the content tasks. A failing cell records its error and the rest continue.
pub fn run_suite<F: Scalar>(
    datasets: &[TaskDataset],
    encoders: &[EncoderInput<F>],
    probes: &ProbeSpace<F>,
    cfg: &SuiteConfig,
    upstream: BTreeMap<String, String>,
) -> ProbeReport {
    let mut cells = Vec::new();
    for enc in encoders {
        for ds in datasets {
            for &mode in &cfg.modes {
                let content = matches!(ds.task, TaskKind::Content1Probe | TaskKind::Content2Probe);
                if mode == FeatureMode::EmbeddingProbe && !content {
                    continue;
                }
                log::info!("probe {} {} {mode}", enc.name, ds.task);
                let (runs, error) = match run_cell(ds, enc, probes, mode, cfg) {
                    Ok(r) => (r, None),
                    Err(e) => (Vec::new(), Some(e.to_string())),
                };
                let accs: Vec<f64> = runs.iter().map(|r| r.accuracy).collect();
                let mean = if accs.is_empty() { 0.0 } else { accs.iter().sum::<f64>() / accs.len() as f64 };
                let min = accs.iter().copied().fold(f64::INFINITY, f64::min);
                let max = accs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                cells.push(CellResult {
                    encoder: enc.name.clone(),
                    task: ds.task,
                    mode,
                    runs,
                    mean,
                    min: if min.is_finite() { min } else { 0.0 },
                    max: if max.is_finite() { max } else { 0.0 },
                    error,
                });
            }
        }
    }
    let mut input_hashes = upstream;
    for enc in encoders {
        input_hashes.insert(format!("vectors/{}", enc.name), enc.hash.clone());
    }
    for ds in datasets {
        input_hashes.insert(format!("dataset/{}", ds.task), ds.manifest.config_hash.clone());
    }
    let config_hash = config_hash(&(cfg, &input_hashes));
    ProbeReport { config_hash, input_hashes, cells }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::relative_error;

    fn toy(n: usize, seed: u64) -> FeatureSet<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Array2::from_shape_simple_fn((n, 4), || StandardNormal.sample(&mut rng));
        let y = x.rows().into_iter().map(|r| u8::from(r[0] + 0.5 * r[1] - r[3] > 0.0)).collect();
        FeatureSet::ungrouped(TaskKind::Content1Probe, Split::Train, FeatureMode::OnehotProbe, x, y)
    }

    #[test]
    fn separable_set_is_learned() {
        // keep only points with a clear margin around the separating plane
        let raw = toy(3000, 1);
        let keep: Vec<usize> =
            (0..raw.len()).filter(|&i| (raw.x[[i, 0]] + 0.5 * raw.x[[i, 1]] - raw.x[[i, 3]]).abs() > 0.3).collect();
        let (x, y) = take_rows(&raw.x, &raw.y, &keep);
        let set = FeatureSet::ungrouped(raw.task, raw.split, raw.mode, x, y);
        let (mlp, _) = train_classifier(&set, &ClassifierConfig { seed: 3, ..Default::default() }).unwrap();
        assert!(evaluate(&mlp, &set).unwrap().accuracy >= 0.99);
    }

    #[test]
    fn shuffled_labels_stay_near_chance_on_dev() {
        let mut set = toy(4000, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        set.y.shuffle(&mut rng);
        let (_, curve) = train_classifier(&set, &ClassifierConfig { seed: 4, ..Default::default() }).unwrap();
        let best = &curve.rows[curve.best_epoch - 1];
        assert!((best.dev_accuracy - 0.5).abs() <= 0.03, "{}", best.dev_accuracy);
    }

    #[test]
    fn dev_split_keeps_groups_whole() {
        let groups: Vec<usize> = (0..1000).map(|i| i / 2).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (dev, fit) = dev_split(&groups, 0.1, &mut rng);
        assert_eq!(dev.len(), 100);
        assert_eq!(dev.len() + fit.len(), 1000);
        let dev_groups: std::collections::BTreeSet<usize> = dev.iter().map(|&i| groups[i]).collect();
        assert!(fit.iter().all(|&i| !dev_groups.contains(&groups[i])));
    }

    #[test]
    fn degenerate_labels_and_test_split_are_rejected() {
        let mut set = toy(50, 3);
        set.y = vec![1; 50];
        assert_eq!(train_classifier(&set, &ClassifierConfig::default()).unwrap_err(), ProbeError::DegenerateLabels);
        let mut set = toy(50, 3);
        set.split = Split::Test;
        assert_eq!(train_classifier(&set, &ClassifierConfig::default()).unwrap_err(), ProbeError::TestSplitAccess);
    }

    #[test]
    fn constant_predictor_scores_half_on_balanced_set() {
        let mut mlp = Mlp::<f64>::new(4, 0);
        mlp.params[W2].fill(0.0);
        mlp.params[B2] = ndarray::array![[1.0, 0.0]];
        let mut set = toy(10, 5);
        set.y = vec![0, 1, 0, 1, 0, 1, 0, 1, 0, 1];
        let e = evaluate(&mlp, &set).unwrap();
        assert_eq!(e.accuracy, 0.5);
        assert_eq!(e.per_class[0], ClassStats { total: 5, correct: 5 });
        assert_eq!(e.per_class[1], ClassStats { total: 5, correct: 0 });
    }

    #[test]
    fn width_mismatch_is_reported() {
        let mlp = Mlp::<f64>::new(5, 0);
        assert_eq!(evaluate(&mlp, &toy(4, 1)).unwrap_err(), ProbeError::WidthMismatch { expected: 5, found: 4 });
    }

    #[test]
    fn gradients_match_central_differences() {
        let set = toy(12, 7);
        let mut mlp = Mlp::<f64>::with_hidden(4, 8, 11);
        // nonzero biases move the ReLU kinks away from the sample points
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for p in mlp.params.iter_mut() {
            p.mapv_inplace(|v| {
                let z: f64 = StandardNormal.sample(&mut rng);
                v + 0.3 * z
            });
        }
        let (_, grads) = mlp.loss_and_grads(&set.x, &set.y);
        let eps = 1e-6;
        let mut worst: f64 = 0.0;
        for pi in 0..mlp.params.len() {
            for idx in 0..mlp.params[pi].len() {
                let (r, c) = (idx / mlp.params[pi].ncols(), idx % mlp.params[pi].ncols());
                let orig = mlp.params[pi][[r, c]];
                mlp.params[pi][[r, c]] = orig + eps;
                let up = mlp.loss(&set.x, &set.y);
                mlp.params[pi][[r, c]] = orig - eps;
                let down = mlp.loss(&set.x, &set.y);
                mlp.params[pi][[r, c]] = orig;
                let num = (up - down) / (2.0 * eps);
                if grads[pi][[r, c]].abs().max(num.abs()) > 1e-6 {
                    worst = worst.max(relative_error(grads[pi][[r, c]], num));
                }
            }
        }
        assert!(worst <= 1e-4, "worst relative error {worst}");
    }

    #[test]
    fn modes_round_trip_through_strings() {
        for m in FeatureMode::ALL {
            assert_eq!(m.as_str().parse::<FeatureMode>().unwrap(), m);
        }
    }
}
