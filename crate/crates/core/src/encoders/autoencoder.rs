//! Denoising sequence autoencoder with GRU encoder and decoder.
//!
//! The encoder reads a corrupted sentence (word dropout, adjacent swaps); the
//! decoder starts from the encoder's final state and reconstructs the clean
//! sentence under teacher forcing. The final encoder state is the sentence
//! vector.

use std::collections::{BTreeMap, HashMap};

use ndarray::{s, Array2, Axis, Zip};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{EmbeddingFileError, EncoderError, SentenceVectors};
use crate::optim::{clip_global_norm, Adam};
use crate::Scalar;

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";

const EMBED: usize = 0;
const ENC: usize = 1;
const DEC: usize = 5;
const WO: usize = 9;
const BO: usize = 10;
const N_PARAMS: usize = 11;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AutoencoderConfig {
    pub word_dim: usize,
    pub hidden_dim: usize,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without held-out improvement before stopping.
    pub patience: usize,
    pub learning_rate: f64,
    pub clip_norm: f64,
    pub drop_prob: f64,
    pub swap_prob: f64,
    pub heldout_fraction: f64,
    pub seed: u64,
}

impl Default for AutoencoderConfig {
    fn default() -> Self {
        AutoencoderConfig {
            word_dim: 64,
            hidden_dim: 128,
            batch_size: 64,
            max_epochs: 12,
            patience: 3,
            learning_rate: 2e-3,
            clip_norm: 5.0,
            drop_prob: 0.1,
            swap_prob: 0.1,
            heldout_fraction: 0.05,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub epoch: usize,
    pub train_loss: f64,
    pub heldout_loss: f64,
    /// Teacher-forced next-token accuracy on clean held-out sentences.
    pub heldout_token_accuracy: f64,
    /// Free-running (greedy) position-wise reconstruction accuracy.
    pub heldout_reconstruction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutoencoderReport {
    pub initial_heldout_loss: f64,
    pub curve: Vec<CurveRow>,
    pub best_epoch: usize,
    pub reconstruction_accuracy: f64,
}

impl AutoencoderReport {
    pub fn curve_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,heldout_loss,heldout_token_accuracy,heldout_reconstruction\n");
        for r in &self.curve {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.epoch, r.train_loss, r.heldout_loss, r.heldout_token_accuracy, r.heldout_reconstruction
            ));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeqAutoencoder<F: Scalar> {
    vocab: Vec<String>,
    index: HashMap<String, usize>,
    /// Embedding, encoder (wx, wh, bx, bh), decoder (wx, wh, bx, bh), output weights and bias.
    pub params: Vec<Array2<F>>,
    pub word_dim: usize,
    pub hidden_dim: usize,
}

/// One length-homogeneous training batch: encoder inputs may be shorter after dropout.
#[derive(Debug, Clone)]
pub struct Batch {
    pub inputs: Vec<Vec<usize>>,
    pub targets: Vec<Vec<usize>>,
}

struct StepCache<F> {
    x: Array2<F>,
    tokens: Vec<usize>,
    h_prev: Array2<F>,
    r: Array2<F>,
    z: Array2<F>,
    n: Array2<F>,
    hn: Array2<F>,
    mask: Option<Array2<F>>,
}

fn sigmoid<F: Scalar>(x: F) -> F {
    F::one() / (F::one() + (-x).exp())
}

/// Word dropout (keeping at least one token), then non-overlapping adjacent swaps.
pub fn add_noise<T: Clone, R: Rng>(tokens: &[T], drop_prob: f64, swap_prob: f64, rng: &mut R) -> Vec<T> {
    let mut out: Vec<T> = tokens.iter().filter(|_| !rng.random_bool(drop_prob)).cloned().collect();
    if out.is_empty() {
        out = tokens.to_vec();
    }
    let mut i = 0;
    while i + 1 < out.len() {
        if rng.random_bool(swap_prob) {
            out.swap(i, i + 1);
            i += 2;
        } else {
            i += 1;
        }
    }
    out
}

impl<F: Scalar> SeqAutoencoder<F> {
    /// Fresh model over the forms of `corpus` plus sentence boundary symbols.
    pub fn new(corpus: &[Vec<String>], word_dim: usize, hidden_dim: usize, seed: u64) -> Self {
        let mut forms: Vec<String> = corpus.iter().flatten().cloned().collect::<std::collections::BTreeSet<_>>().into_iter().collect();
        forms.insert(0, EOS.to_string());
        forms.insert(0, BOS.to_string());
        let index = forms.iter().enumerate().map(|(i, f)| (f.clone(), i)).collect();
        let v = forms.len();
        let (e, h) = (word_dim, hidden_dim);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut uniform = |rows: usize, cols: usize, bound: f64| {
            Array2::from_shape_fn((rows, cols), |_| F::of(rng.random_range(-bound..bound)))
        };
        let gb = 1.0 / (h as f64).sqrt();
        let mut params = Vec::with_capacity(N_PARAMS);
        params.push(uniform(v, e, 0.1));
        for _ in 0..2 {
            params.push(uniform(e, 3 * h, gb));
            params.push(uniform(h, 3 * h, gb));
            params.push(Array2::zeros((1, 3 * h)));
            params.push(Array2::zeros((1, 3 * h)));
        }
        params.push(uniform(h, v, gb));
        params.push(Array2::zeros((1, v)));
        SeqAutoencoder { vocab: forms, index, params, word_dim, hidden_dim }
    }

    /// Header `seq-autoencoder word_dim hidden_dim`, the vocabulary line, then
    /// each parameter as `rows cols` followed by its rows.
    pub fn to_text(&self) -> String {
        let mut out = format!("seq-autoencoder {} {}\n{}\n", self.word_dim, self.hidden_dim, self.vocab.join(" "));
        for p in &self.params {
            out.push_str(&format!("{} {}\n", p.nrows(), p.ncols()));
            for row in p.rows() {
                let vals: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                out.push_str(&vals.join(" "));
                out.push('\n');
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, EmbeddingFileError> {
        let mut lines = text.lines().enumerate();
        let mut next = |what: &str| {
            lines.next().ok_or_else(|| EmbeddingFileError::MalformedHeader(format!("missing {what}")))
        };
        let (_, header) = next("header")?;
        let dims: Vec<usize> = match header.split_whitespace().collect::<Vec<_>>().as_slice() {
            ["seq-autoencoder", e, h] => [e, h].iter().filter_map(|v| v.parse().ok()).collect(),
            _ => Vec::new(),
        };
        if dims.len() != 2 {
            return Err(EmbeddingFileError::MalformedHeader(header.to_string()));
        }
        let vocab: Vec<String> = next("vocabulary")?.1.split_whitespace().map(str::to_string).collect();
        let mut params = Vec::with_capacity(N_PARAMS);
        for _ in 0..N_PARAMS {
            let (i, shape) = next("parameter shape")?;
            let rc: Vec<usize> = shape.split_whitespace().filter_map(|v| v.parse().ok()).collect();
            let [rows, cols] = rc[..] else {
                return Err(EmbeddingFileError::MalformedHeader(format!("line {}: {shape}", i + 1)));
            };
            let mut data = Vec::with_capacity(rows * cols);
            for _ in 0..rows {
                let (i, line) = next("parameter row")?;
                let vals: Vec<&str> = line.split_whitespace().collect();
                if vals.len() != cols {
                    return Err(EmbeddingFileError::DimensionMismatch { line: i + 1, expected: cols, found: vals.len() });
                }
                for v in vals {
                    data.push(F::parse_exact(v).ok_or_else(|| EmbeddingFileError::BadValue { line: i + 1, value: v.into() })?);
                }
            }
            params.push(Array2::from_shape_vec((rows, cols), data).expect("shape checked"));
        }
        let index = vocab.iter().enumerate().map(|(i, f)| (f.clone(), i)).collect();
        Ok(SeqAutoencoder { vocab, index, params, word_dim: dims[0], hidden_dim: dims[1] })
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn ids(&self, tokens: &[String]) -> Result<Vec<usize>, EncoderError> {
        tokens.iter().map(|t| self.index.get(t).copied().ok_or_else(|| EncoderError::OutOfVocabulary(t.clone()))).collect()
    }

    fn embed(&self, tokens: &[usize]) -> Array2<F> {
        self.params[EMBED].select(Axis(0), tokens)
    }

    fn gru_step(&self, base: usize, x: Array2<F>, tokens: Vec<usize>, h_prev: &Array2<F>, mask: Option<Array2<F>>) -> (Array2<F>, StepCache<F>) {
        let hd = self.hidden_dim;
        let a = x.dot(&self.params[base]) + &self.params[base + 2];
        let hh = h_prev.dot(&self.params[base + 1]) + &self.params[base + 3];
        let r = (&a.slice(s![.., 0..hd]) + &hh.slice(s![.., 0..hd])).mapv(sigmoid);
        let z = (&a.slice(s![.., hd..2 * hd]) + &hh.slice(s![.., hd..2 * hd])).mapv(sigmoid);
        let hn = hh.slice(s![.., 2 * hd..]).to_owned();
        let mut n = a.slice(s![.., 2 * hd..]).to_owned();
        Zip::from(&mut n).and(&r).and(&hn).for_each(|n, &r, &hn| *n = (*n + r * hn).tanh());
        let mut h = Array2::zeros(h_prev.raw_dim());
        Zip::from(&mut h).and(&z).and(&n).and(h_prev).for_each(|h, &z, &n, &hp| *h = (F::one() - z) * n + z * hp);
        if let Some(m) = &mask {
            Zip::from(&mut h).and_broadcast(m).and(h_prev).for_each(|h, &m, &hp| *h = m * *h + (F::one() - m) * hp);
        }
        (h, StepCache { x, tokens, h_prev: h_prev.clone(), r, z, n, hn, mask })
    }

    /// Backpropagates `dh` through one step; accumulates parameter and embedding grads, returns dh_prev.
    fn gru_step_back(&self, base: usize, c: &StepCache<F>, dh: &Array2<F>, grads: &mut [Array2<F>]) -> Array2<F> {
        let hd = self.hidden_dim;
        let one = F::one();
        let (dh_new, mut dh_prev) = match &c.mask {
            Some(m) => (dh * m, dh * &m.mapv(|m| one - m)),
            None => (dh.clone(), Array2::zeros(dh.raw_dim())),
        };
        let b = dh.nrows();
        let mut da = Array2::<F>::zeros((b, 3 * hd));
        let mut dhh = Array2::<F>::zeros((b, 3 * hd));
        for i in 0..b {
            for j in 0..hd {
                let g = dh_new[[i, j]];
                let (r, z, n, hn, hp) = (c.r[[i, j]], c.z[[i, j]], c.n[[i, j]], c.hn[[i, j]], c.h_prev[[i, j]]);
                dh_prev[[i, j]] += g * z;
                let dn_pre = g * (one - z) * (one - n * n);
                let dz_pre = g * (hp - n) * z * (one - z);
                let dr_pre = dn_pre * hn * r * (one - r);
                da[[i, j]] = dr_pre;
                da[[i, hd + j]] = dz_pre;
                da[[i, 2 * hd + j]] = dn_pre;
                dhh[[i, j]] = dr_pre;
                dhh[[i, hd + j]] = dz_pre;
                dhh[[i, 2 * hd + j]] = dn_pre * r;
            }
        }
        grads[base] += &c.x.t().dot(&da);
        grads[base + 1] += &c.h_prev.t().dot(&dhh);
        grads[base + 2] += &da.sum_axis(Axis(0)).insert_axis(Axis(0));
        grads[base + 3] += &dhh.sum_axis(Axis(0)).insert_axis(Axis(0));
        dh_prev += &dhh.dot(&self.params[base + 1].t());
        let dx = da.dot(&self.params[base].t());
        for (row, &tok) in c.tokens.iter().enumerate() {
            let mut g = grads[EMBED].row_mut(tok);
            g += &dx.row(row);
        }
        dh_prev
    }

    /// Runs the encoder over right-padded inputs; returns final states and step caches.
    fn encode_ids(&self, inputs: &[Vec<usize>]) -> (Array2<F>, Vec<StepCache<F>>) {
        let b = inputs.len();
        let t_max = inputs.iter().map(Vec::len).max().unwrap_or(0);
        let uniform = inputs.iter().all(|s| s.len() == t_max);
        let mut h = Array2::zeros((b, self.hidden_dim));
        let mut caches = Vec::with_capacity(t_max);
        for t in 0..t_max {
            let tokens: Vec<usize> = inputs.iter().map(|s| s.get(t).copied().unwrap_or(0)).collect();
            let mask = (!uniform).then(|| {
                Array2::from_shape_fn((b, 1), |(i, _)| if t < inputs[i].len() { F::one() } else { F::zero() })
            });
            let (h_next, cache) = self.gru_step(ENC, self.embed(&tokens), tokens, &h, mask);
            h = h_next;
            caches.push(cache);
        }
        (h, caches)
    }

    fn softmax_rows(logits: &mut Array2<F>) {
        for mut row in logits.rows_mut() {
            let m = row.iter().copied().fold(F::neg_infinity(), F::max);
            row.mapv_inplace(|x| (x - m).exp());
            let s: F = row.sum();
            row.mapv_inplace(|x| x / s);
        }
    }

    /// Teacher-forced decoder inputs and targets for equal-length clean targets.
    fn decoder_io(&self, targets: &[Vec<usize>]) -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
        let (bos, eos) = (self.index[BOS], self.index[EOS]);
        let steps = targets[0].len() + 1;
        let mut ins = vec![Vec::with_capacity(targets.len()); steps];
        let mut outs = vec![Vec::with_capacity(targets.len()); steps];
        for tgt in targets {
            for t in 0..steps {
                ins[t].push(if t == 0 { bos } else { tgt[t - 1] });
                outs[t].push(if t < tgt.len() { tgt[t] } else { eos });
            }
        }
        (ins, outs)
    }

    /// Mean token cross-entropy, correct teacher-forced predictions and token count.
    pub fn batch_loss(&self, batch: &Batch) -> (f64, usize, usize) {
        let (mut h, _) = self.encode_ids(&batch.inputs);
        let (ins, outs) = self.decoder_io(&batch.targets);
        let (mut loss, mut correct, mut count) = (0.0, 0, 0);
        for (tin, tout) in ins.into_iter().zip(&outs) {
            let (h_next, _) = self.gru_step(DEC, self.embed(&tin), tin, &h, None);
            h = h_next;
            let mut p = h.dot(&self.params[WO]) + &self.params[BO];
            Self::softmax_rows(&mut p);
            for (i, &y) in tout.iter().enumerate() {
                let row = p.row(i);
                loss -= row[y].as_f64().max(1e-30).ln();
                let arg = argmax(row.iter().copied());
                correct += (arg == y) as usize;
                count += 1;
            }
        }
        (loss / count as f64, correct, count)
    }

    /// Mean token cross-entropy and its gradient with respect to every parameter.
    pub fn loss_and_grads(&self, batch: &Batch) -> (f64, Vec<Array2<F>>) {
        let mut grads: Vec<Array2<F>> = self.params.iter().map(|p| Array2::zeros(p.raw_dim())).collect();
        let (h_enc, enc_caches) = self.encode_ids(&batch.inputs);
        let (ins, outs) = self.decoder_io(&batch.targets);
        let count = (ins.len() * batch.targets.len()) as f64;
        let scale = F::of(1.0 / count);
        let mut h = h_enc;
        let mut dec_caches = Vec::with_capacity(ins.len());
        let mut states = Vec::with_capacity(ins.len());
        let mut loss = 0.0;
        let mut dlogits_all = Vec::with_capacity(ins.len());
        for (tin, tout) in ins.into_iter().zip(&outs) {
            let (h_next, cache) = self.gru_step(DEC, self.embed(&tin), tin, &h, None);
            h = h_next;
            let mut p = h.dot(&self.params[WO]) + &self.params[BO];
            Self::softmax_rows(&mut p);
            for (i, &y) in tout.iter().enumerate() {
                loss -= p[[i, y]].as_f64().max(1e-30).ln();
                p[[i, y]] -= F::one();
            }
            p.mapv_inplace(|x| x * scale);
            dlogits_all.push(p);
            dec_caches.push(cache);
            states.push(h.clone());
        }
        let mut dh = Array2::<F>::zeros(h.raw_dim());
        for t in (0..dec_caches.len()).rev() {
            let dl = &dlogits_all[t];
            grads[WO] += &states[t].t().dot(dl);
            grads[BO] += &dl.sum_axis(Axis(0)).insert_axis(Axis(0));
            dh += &dl.dot(&self.params[WO].t());
            dh = self.gru_step_back(DEC, &dec_caches[t], &dh, &mut grads);
        }
        for c in enc_caches.iter().rev() {
            dh = self.gru_step_back(ENC, c, &dh, &mut grads);
        }
        (loss / count, grads)
    }

    /// Sentence vectors (final encoder states) for token-id sequences.
    pub fn encode_batch(&self, inputs: &[Vec<usize>]) -> Array2<F> {
        self.encode_ids(inputs).0
    }

    /// Greedy reconstruction of equal-length clean sentences for `steps` steps.
    pub fn greedy_decode(&self, inputs: &[Vec<usize>], steps: usize) -> Vec<Vec<usize>> {
        let (mut h, _) = self.encode_ids(inputs);
        let mut prev = vec![self.index[BOS]; inputs.len()];
        let mut out = vec![Vec::with_capacity(steps); inputs.len()];
        for _ in 0..steps {
            let (h_next, _) = self.gru_step(DEC, self.embed(&prev), prev.clone(), &h, None);
            h = h_next;
            let logits = h.dot(&self.params[WO]) + &self.params[BO];
            for (i, row) in logits.rows().into_iter().enumerate() {
                prev[i] = argmax(row.iter().copied());
                out[i].push(prev[i]);
            }
        }
        out
    }

    /// Fraction of target positions (sentence plus end symbol) reproduced by greedy decoding.
    pub fn reconstruction_accuracy(&self, sentences: &[Vec<usize>], batch_size: usize) -> f64 {
        let eos = self.index[EOS];
        let (mut correct, mut total) = (0usize, 0usize);
        for batch in length_batches(sentences, batch_size) {
            let clean: Vec<Vec<usize>> = batch.iter().map(|i| sentences[*i].clone()).collect();
            let steps = clean[0].len() + 1;
            let decoded = self.greedy_decode(&clean, steps);
            for (tgt, got) in clean.iter().zip(&decoded) {
                for t in 0..steps {
                    let want = if t < tgt.len() { tgt[t] } else { eos };
                    correct += (got[t] == want) as usize;
                }
                total += steps;
            }
        }
        correct as f64 / total.max(1) as f64
    }
}

fn argmax<F: Scalar>(it: impl Iterator<Item = F>) -> usize {
    let mut best = (0, F::neg_infinity());
    for (i, v) in it.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// Index batches of equal-length sentences in a deterministic order.
fn length_batches(sentences: &[Vec<usize>], batch_size: usize) -> Vec<Vec<usize>> {
    let mut buckets: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, s) in sentences.iter().enumerate() {
        buckets.entry(s.len()).or_default().push(i);
    }
    buckets.into_values().flat_map(|b| b.chunks(batch_size).map(<[usize]>::to_vec).collect::<Vec<_>>()).collect()
}

fn heldout_metrics<F: Scalar>(model: &SeqAutoencoder<F>, heldout: &[Vec<usize>], batch_size: usize) -> (f64, f64) {
    let (mut loss, mut correct, mut count) = (0.0, 0, 0);
    for idx in length_batches(heldout, batch_size) {
        let clean: Vec<Vec<usize>> = idx.iter().map(|i| heldout[*i].clone()).collect();
        let (l, c, n) = model.batch_loss(&Batch { inputs: clean.clone(), targets: clean });
        loss += l * n as f64;
        correct += c;
        count += n;
    }
    (loss / count.max(1) as f64, correct as f64 / count.max(1) as f64)
}

/// Trains on `corpus` with a held-out slice for early stopping; restores the best epoch.
pub fn train_seq_autoencoder<F: Scalar>(
    corpus: &[Vec<String>],
    cfg: &AutoencoderConfig,
) -> Result<(SeqAutoencoder<F>, AutoencoderReport), EncoderError> {
    if corpus.is_empty() {
        return Err(EncoderError::EmptyCorpus);
    }
    let mut model = SeqAutoencoder::<F>::new(corpus, cfg.word_dim, cfg.hidden_dim, cfg.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
    let mut ids: Vec<Vec<usize>> = corpus.iter().map(|s| model.ids(s)).collect::<Result<_, _>>()?;
    if ids.iter().any(Vec::is_empty) {
        return Err(EncoderError::EmptySequence);
    }
    ids.shuffle(&mut rng);
    let n_held = ((ids.len() as f64 * cfg.heldout_fraction).round() as usize).clamp(1, ids.len().max(2) - 1);
    let heldout = ids.split_off(ids.len() - n_held);
    let train = ids;

    let mut opt = Adam::new(&model.params, cfg.learning_rate);
    let (initial_heldout_loss, _) = heldout_metrics(&model, &heldout, cfg.batch_size);
    let mut report = AutoencoderReport { initial_heldout_loss, curve: Vec::new(), best_epoch: 0, reconstruction_accuracy: 0.0 };
    let mut best = (f64::INFINITY, model.params.clone());
    let mut since_best = 0;
    for epoch in 1..=cfg.max_epochs {
        let noisy: Vec<Vec<usize>> = train.iter().map(|s| add_noise(s, cfg.drop_prob, cfg.swap_prob, &mut rng)).collect();
        let mut batches = length_batches(&train, cfg.batch_size);
        batches.shuffle(&mut rng);
        let (mut loss_sum, mut weight) = (0.0, 0.0);
        for idx in batches {
            let batch = Batch {
                inputs: idx.iter().map(|i| noisy[*i].clone()).collect(),
                targets: idx.iter().map(|i| train[*i].clone()).collect(),
            };
            let (loss, mut grads) = model.loss_and_grads(&batch);
            if !loss.is_finite() {
                return Err(EncoderError::Divergence { epoch, reason: "non-finite training loss".into() });
            }
            clip_global_norm(&mut grads, cfg.clip_norm);
            opt.step(&mut model.params, &grads);
            let w = (idx.len() * (batch.targets[0].len() + 1)) as f64;
            loss_sum += loss * w;
            weight += w;
        }
        let (heldout_loss, heldout_token_accuracy) = heldout_metrics(&model, &heldout, cfg.batch_size);
        let heldout_reconstruction = model.reconstruction_accuracy(&heldout, cfg.batch_size);
        let row = CurveRow { epoch, train_loss: loss_sum / weight, heldout_loss, heldout_token_accuracy, heldout_reconstruction };
        log::info!(
            "autoencoder epoch {epoch}: train {:.4} heldout {:.4} tf-acc {:.4} recon {:.4}",
            row.train_loss, heldout_loss, heldout_token_accuracy, heldout_reconstruction
        );
        report.curve.push(row);
        if !heldout_loss.is_finite() {
            return Err(EncoderError::Divergence { epoch, reason: "non-finite held-out loss".into() });
        }
        if heldout_loss < best.0 {
            best = (heldout_loss, model.params.clone());
            report.best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
            if epoch > cfg.patience && heldout_loss > initial_heldout_loss {
                return Err(EncoderError::Divergence {
                    epoch,
                    reason: format!("held-out loss {heldout_loss:.4} above initial {initial_heldout_loss:.4}"),
                });
            }
            if since_best >= cfg.patience {
                break;
            }
        }
    }
    model.params = best.1;
    report.reconstruction_accuracy = report.curve[report.best_epoch - 1].heldout_reconstruction;
    Ok((model, report))
}

/// Final encoder state for one sentence.
pub fn seq_encode<F: Scalar>(tokens: &[String], model: &SeqAutoencoder<F>) -> Result<ndarray::Array1<F>, EncoderError> {
    if tokens.is_empty() {
        return Err(EncoderError::EmptySequence);
    }
    let ids = model.ids(tokens)?;
    Ok(model.encode_batch(&[ids]).row(0).to_owned())
}

/// Sentence vectors for `(id, tokens)` pairs, one sentence at a time.
pub fn seq_encode_all<F: Scalar>(
    sentences: &[(u64, Vec<String>)],
    model: &SeqAutoencoder<F>,
) -> Result<SentenceVectors<F>, EncoderError> {
    let mut m = Array2::zeros((sentences.len(), model.hidden_dim));
    for (i, (_, tokens)) in sentences.iter().enumerate() {
        m.row_mut(i).assign(&seq_encode(tokens, model)?);
    }
    Ok(SentenceVectors::new("seq-autoencoder", sentences.iter().map(|s| s.0).collect(), m))
}

