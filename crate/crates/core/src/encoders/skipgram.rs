//! Skip-gram with negative sampling.

use std::collections::BTreeMap;

use ndarray::{Array2, ArrayView2};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{EmbeddingTable, EncoderError};
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SkipGramConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Every form must occur at least this often.
    pub min_count: usize,
    pub seed: u64,
}

impl Default for SkipGramConfig {
    fn default() -> Self {
        SkipGramConfig { dim: 64, window: 5, negatives: 5, epochs: 5, learning_rate: 0.025, min_count: 50, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkipGramReport {
    /// Mean pair loss per epoch.
    pub epoch_losses: Vec<f64>,
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Loss of one (center, context) pair with its negatives, and its gradients:
/// `grad_in` for the center's input row, `grad_out` row `j` for output row
/// `[context, negatives..][j]`.
pub fn sgns_pair_loss_and_grad<F: Scalar>(
    w_in: ArrayView2<'_, F>,
    w_out: ArrayView2<'_, F>,
    center: usize,
    context: usize,
    negatives: &[usize],
    grad_in: &mut [F],
    grad_out: &mut Array2<F>,
) -> f64 {
    let v = w_in.row(center);
    grad_in.iter_mut().for_each(|g| *g = F::zero());
    let mut loss = 0.0;
    for (j, (&target, label)) in std::iter::once(&context).zip([1.0]).chain(negatives.iter().zip(std::iter::repeat(0.0))).enumerate() {
        let u = w_out.row(target);
        let s = u.dot(&v).as_f64();
        loss += if label == 1.0 { softplus(-s) } else { softplus(s) };
        let g = F::of(sigmoid(s) - label);
        for (gi, &ui) in grad_in.iter_mut().zip(u.iter()) {
            *gi += g * ui;
        }
        for (go, &vi) in grad_out.row_mut(j).iter_mut().zip(v.iter()) {
            *go = g * vi;
        }
    }
    loss
}

/// Trains word vectors on `corpus`; the returned table holds the input vectors.
pub fn train_skipgram<F: Scalar>(
    corpus: &[Vec<String>],
    cfg: &SkipGramConfig,
) -> Result<(EmbeddingTable<F>, SkipGramReport), EncoderError> {
    if corpus.iter().all(|s| s.is_empty()) {
        return Err(EncoderError::EmptyCorpus);
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for s in corpus {
        for t in s {
            *counts.entry(t).or_default() += 1;
        }
    }
    let rare: Vec<String> = counts.iter().filter(|(_, c)| **c < cfg.min_count).map(|(f, _)| f.to_string()).collect();
    if !rare.is_empty() {
        return Err(EncoderError::UndertrainedVocabulary { min_count: cfg.min_count, forms: rare });
    }
    let forms: Vec<String> = counts.keys().map(|f| f.to_string()).collect();
    let index: BTreeMap<&str, usize> = counts.keys().enumerate().map(|(i, f)| (*f, i)).collect();
    let ids: Vec<Vec<usize>> = corpus.iter().map(|s| s.iter().map(|t| index[t.as_str()]).collect()).collect();
    let noise = WeightedIndex::new(counts.values().map(|c| (*c as f64).powf(0.75))).expect("positive counts");

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (v, d) = (forms.len(), cfg.dim);
    let bound = 0.5 / d as f64;
    let mut w_in = Array2::from_shape_fn((v, d), |_| F::of(rng.random_range(-bound..bound)));
    let mut w_out = Array2::<F>::zeros((v, d));
    let mut grad_in = vec![F::zero(); d];
    let mut grad_out = Array2::<F>::zeros((cfg.negatives + 1, d));
    let mut negs = Vec::with_capacity(cfg.negatives);

    let total_steps = (cfg.epochs * ids.iter().map(Vec::len).sum::<usize>()).max(1) as f64;
    let mut step = 0usize;
    let mut order: Vec<usize> = (0..ids.len()).collect();
    let mut report = SkipGramReport { epoch_losses: Vec::new() };
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let (mut loss_sum, mut pairs) = (0.0, 0usize);
        for &si in &order {
            let sent = &ids[si];
            for (i, &center) in sent.iter().enumerate() {
                let lr = F::of(cfg.learning_rate * (1.0 - step as f64 / total_steps).max(1e-4));
                step += 1;
                let lo = i.saturating_sub(cfg.window);
                let hi = (i + cfg.window).min(sent.len() - 1);
                for (j, &context) in sent.iter().enumerate().take(hi + 1).skip(lo) {
                    if j == i {
                        continue;
                    }
                    negs.clear();
                    for _ in 0..cfg.negatives {
                        let n = noise.sample(&mut rng);
                        if n != context {
                            negs.push(n);
                        }
                    }
                    loss_sum +=
                        sgns_pair_loss_and_grad(w_in.view(), w_out.view(), center, context, &negs, &mut grad_in, &mut grad_out);
                    pairs += 1;
                    for (k, &target) in std::iter::once(&context).chain(negs.iter()).enumerate() {
                        let g = grad_out.row(k);
                        w_out.row_mut(target).scaled_add(-lr, &g);
                    }
                    for (w, g) in w_in.row_mut(center).iter_mut().zip(&grad_in) {
                        *w -= lr * *g;
                    }
                }
            }
        }
        let mean = loss_sum / pairs.max(1) as f64;
        if !mean.is_finite() {
            return Err(EncoderError::Divergence { epoch: report.epoch_losses.len(), reason: "non-finite loss".into() });
        }
        log::debug!("skip-gram epoch {} loss {mean:.4}", report.epoch_losses.len());
        report.epoch_losses.push(mean);
    }
    Ok((EmbeddingTable::new(forms, w_in), report))
}
