//! Unidirectional GRU text classifier with mutual-information vocabulary
//! selection — the small recurrent baseline the encoder is compared against.
//!
//! Words are whitespace tokens mapped through a vocabulary of the top-k
//! words by mutual information between binary word presence and the class
//! label. Id 0 is padding (skipped by the recurrence), id 1 the shared
//! unknown-word embedding.

use std::collections::{BTreeMap, BTreeSet};

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::finetune::PredictionResult;
use crate::nn::optim::{AdamW, OptimizerConfig};
use crate::nn::{cross_entropy, dropout_mask, softmax_vec, uniform_init, Phase, Tensors};

pub const GRU_PAD: usize = 0;
pub const GRU_UNK: usize = 1;

#[derive(Debug, Clone)]
pub struct GruConfig {
    pub hidden_units: usize,
    pub dropout: f64,
    pub embed_dim: usize,
    pub max_words: usize,
    pub vocab_top_k: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
}

impl Default for GruConfig {
    fn default() -> Self {
        GruConfig {
            hidden_units: 500,
            dropout: 0.5,
            embed_dim: 300,
            max_words: 30,
            vocab_top_k: 100_000,
            batch_size: 8,
            learning_rate: 1e-3,
            epochs: 30,
        }
    }
}

impl GruConfig {
    /// Shrunk dimensions for tests and toy runs.
    pub fn desk_default() -> Self {
        GruConfig {
            hidden_units: 32,
            dropout: 0.2,
            embed_dim: 16,
            max_words: 16,
            vocab_top_k: 2_000,
            batch_size: 8,
            learning_rate: 5e-3,
            epochs: 30,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden_units == 0
            || self.embed_dim == 0
            || self.max_words == 0
            || self.vocab_top_k == 0
            || self.batch_size == 0
            || self.epochs == 0
        {
            return Err(Error::InvalidConfig(
                "all GRU dimensions must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidConfig(format!(
                "dropout must lie in [0,1), got {}",
                self.dropout
            )));
        }
        if self.learning_rate <= 0.0 {
            return Err(Error::InvalidConfig("learning_rate must be positive".into()));
        }
        Ok(())
    }
}

/// Select the `k` word types with the highest mutual information between
/// binary per-document presence and the class label. Ties break by corpus
/// frequency, then lexicographically.
pub fn mi_vocab(corpus: &LabeledDataset, k: usize) -> Result<Vec<String>> {
    if k == 0 {
        return Err(Error::InvalidConfig("k must be positive".into()));
    }
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let n_docs = corpus.len() as f64;
    let mut class_count: BTreeMap<&str, usize> = BTreeMap::new();
    // Per word: document frequency per class + total token frequency.
    let mut presence: BTreeMap<&str, BTreeMap<&str, usize>> = BTreeMap::new();
    let mut token_freq: BTreeMap<&str, u64> = BTreeMap::new();

    for sample in &corpus.samples {
        *class_count.entry(sample.label.as_str()).or_insert(0) += 1;
        let mut seen: BTreeSet<&str> = BTreeSet::new();
        for word in sample.text.split_whitespace() {
            *token_freq.entry(word).or_insert(0) += 1;
            seen.insert(word);
        }
        for word in seen {
            *presence
                .entry(word)
                .or_default()
                .entry(sample.label.as_str())
                .or_insert(0) += 1;
        }
    }

    let mut scored: Vec<(f64, u64, &str)> = presence
        .iter()
        .map(|(word, per_class)| {
            let n_present: usize = per_class.values().sum();
            let p_present = n_present as f64 / n_docs;
            let mut mi = 0.0;
            for (class, &n_class) in &class_count {
                let p_class = n_class as f64 / n_docs;
                let joint_present =
                    per_class.get(class).copied().unwrap_or(0) as f64 / n_docs;
                let joint_absent = (n_class as f64 / n_docs) - joint_present;
                for (joint, p_word) in [(joint_present, p_present), (joint_absent, 1.0 - p_present)]
                {
                    if joint > 0.0 {
                        mi += joint * (joint / (p_word * p_class)).ln();
                    }
                }
            }
            (mi, token_freq[word], *word)
        })
        .collect();

    scored.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(b.1.cmp(&a.1))
            .then(a.2.cmp(b.2))
    });
    Ok(scored
        .into_iter()
        .take(k)
        .map(|(_, _, w)| w.to_string())
        .collect())
}

#[derive(Debug, Clone)]
pub struct GruParams {
    pub embedding: Array2<f64>,
    pub w_update: Array2<f64>,
    pub u_update: Array2<f64>,
    pub b_update: Array2<f64>,
    pub w_reset: Array2<f64>,
    pub u_reset: Array2<f64>,
    pub b_reset: Array2<f64>,
    pub w_cand: Array2<f64>,
    pub u_cand: Array2<f64>,
    pub b_cand: Array2<f64>,
    pub w_out: Array2<f64>,
    pub b_out: Array2<f64>,
}

impl GruParams {
    pub fn init(vocab_size: usize, cfg: &GruConfig, n_classes: usize, rng: &mut ChaCha8Rng) -> Self {
        let e = cfg.embed_dim;
        let h = cfg.hidden_units;
        GruParams {
            embedding: uniform_init(vocab_size, e, e, rng),
            w_update: uniform_init(e, h, e, rng),
            u_update: uniform_init(h, h, h, rng),
            b_update: Array2::zeros((1, h)),
            w_reset: uniform_init(e, h, e, rng),
            u_reset: uniform_init(h, h, h, rng),
            b_reset: Array2::zeros((1, h)),
            w_cand: uniform_init(e, h, e, rng),
            u_cand: uniform_init(h, h, h, rng),
            b_cand: Array2::zeros((1, h)),
            w_out: uniform_init(h, n_classes, h, rng),
            b_out: Array2::zeros((1, n_classes)),
        }
    }
}

impl Tensors for GruParams {
    fn tensors(&self) -> Vec<(String, &Array2<f64>)> {
        vec![
            ("embedding".into(), &self.embedding),
            ("w_update".into(), &self.w_update),
            ("u_update".into(), &self.u_update),
            ("b_update".into(), &self.b_update),
            ("w_reset".into(), &self.w_reset),
            ("u_reset".into(), &self.u_reset),
            ("b_reset".into(), &self.b_reset),
            ("w_cand".into(), &self.w_cand),
            ("u_cand".into(), &self.u_cand),
            ("b_cand".into(), &self.b_cand),
            ("w_out".into(), &self.w_out),
            ("b_out".into(), &self.b_out),
        ]
    }

    fn tensors_mut(&mut self) -> Vec<(String, &mut Array2<f64>)> {
        vec![
            ("embedding".into(), &mut self.embedding),
            ("w_update".into(), &mut self.w_update),
            ("u_update".into(), &mut self.u_update),
            ("b_update".into(), &mut self.b_update),
            ("w_reset".into(), &mut self.w_reset),
            ("u_reset".into(), &mut self.u_reset),
            ("b_reset".into(), &mut self.b_reset),
            ("w_cand".into(), &mut self.w_cand),
            ("u_cand".into(), &mut self.u_cand),
            ("b_cand".into(), &mut self.b_cand),
            ("w_out".into(), &mut self.w_out),
            ("b_out".into(), &mut self.b_out),
        ]
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

struct GruStep {
    id: usize,
    h_prev: Array1<f64>,
    update: Array1<f64>,
    reset: Array1<f64>,
    cand: Array1<f64>,
}

/// Forward-pass activations kept for backpropagation.
pub struct GruCache {
    steps: Vec<GruStep>,
    final_hidden: Array1<f64>,
    drop_mask: Option<Array1<f64>>,
}

fn affine(
    x: &Array1<f64>,
    h: &Array1<f64>,
    w: &Array2<f64>,
    u: &Array2<f64>,
    b: &Array2<f64>,
) -> Array1<f64> {
    x.dot(w) + h.dot(u) + &b.row(0)
}

/// Run the GRU over word ids and project the final state to class logits.
///
/// Padding ids are skipped, so pre- and post-padded inputs give the same
/// result and an all-padding (or empty) input projects the zero state.
/// The gate convention: `h_t = z ⊙ h_{t-1} + (1 − z) ⊙ h̃_t` with update
/// gate `z`, reset gate `r` and candidate `h̃ = tanh(W x + U (r ⊙ h) + b)`.
pub fn gru_forward(
    word_ids: &[usize],
    params: &GruParams,
    dropout: f64,
    phase: &mut Phase<'_>,
) -> (Array1<f64>, GruCache) {
    let h_size = params.u_update.nrows();
    let mut h = Array1::zeros(h_size);
    let mut steps = Vec::with_capacity(word_ids.len());
    for &id in word_ids {
        if id == GRU_PAD {
            continue;
        }
        let x = params.embedding.row(id).to_owned();
        let update = affine(&x, &h, &params.w_update, &params.u_update, &params.b_update)
            .mapv(sigmoid);
        let reset =
            affine(&x, &h, &params.w_reset, &params.u_reset, &params.b_reset).mapv(sigmoid);
        let gated = &reset * &h;
        let cand = (x.dot(&params.w_cand) + gated.dot(&params.u_cand) + &params.b_cand.row(0))
            .mapv(f64::tanh);
        let h_next = &update * &h + &(1.0 - &update) * &cand;
        steps.push(GruStep {
            id,
            h_prev: h,
            update,
            reset,
            cand,
        });
        h = h_next;
    }
    let final_hidden = h.clone();
    let (fed, drop_mask) = match phase {
        Phase::Train { rng } if dropout > 0.0 => {
            let m = dropout_mask(1, h_size, dropout, rng).row(0).to_owned();
            (&h * &m, Some(m))
        }
        _ => (h, None),
    };
    let logits = fed.dot(&params.w_out) + &params.b_out.row(0);
    (
        logits,
        GruCache {
            steps,
            final_hidden,
            drop_mask,
        },
    )
}

/// Backpropagate through time, accumulating into `grads`.
pub fn gru_backward(
    d_logits: &Array1<f64>,
    params: &GruParams,
    cache: &GruCache,
    grads: &mut GruParams,
) {
    let fed = match &cache.drop_mask {
        Some(m) => &cache.final_hidden * m,
        None => cache.final_hidden.clone(),
    };
    // logits = fed · w_out + b_out
    for (i, &dl) in d_logits.iter().enumerate() {
        for j in 0..fed.len() {
            grads.w_out[[j, i]] += fed[j] * dl;
        }
        grads.b_out[[0, i]] += dl;
    }
    let mut d_h = d_logits.dot(&params.w_out.t());
    if let Some(m) = &cache.drop_mask {
        d_h *= m;
    }

    for step in cache.steps.iter().rev() {
        let one_minus_update = step.update.mapv(|z| 1.0 - z);
        // h = z ⊙ h_prev + (1 − z) ⊙ cand
        let d_update = &d_h * &(&step.h_prev - &step.cand);
        let d_cand = &d_h * &one_minus_update;
        let mut d_h_prev = &d_h * &step.update;

        let d_a_cand = &d_cand * &step.cand.mapv(|c| 1.0 - c * c);
        let d_a_update = &d_update * &step.update.mapv(|z| z * (1.0 - z));

        let gated = &step.reset * &step.h_prev;
        let d_gated = d_a_cand.dot(&params.u_cand.t());
        let d_reset = &d_gated * &step.h_prev;
        d_h_prev += &(&d_gated * &step.reset);
        let d_a_reset = &d_reset * &step.reset.mapv(|r| r * (1.0 - r));

        d_h_prev += &d_a_update.dot(&params.u_update.t());
        d_h_prev += &d_a_reset.dot(&params.u_reset.t());

        let x = params.embedding.row(step.id).to_owned();
        let mut d_x = d_a_update.dot(&params.w_update.t());
        d_x += &d_a_reset.dot(&params.w_reset.t());
        d_x += &d_a_cand.dot(&params.w_cand.t());

        accumulate_outer(&mut grads.w_update, &x, &d_a_update);
        accumulate_outer(&mut grads.u_update, &step.h_prev, &d_a_update);
        add_row(&mut grads.b_update, &d_a_update);
        accumulate_outer(&mut grads.w_reset, &x, &d_a_reset);
        accumulate_outer(&mut grads.u_reset, &step.h_prev, &d_a_reset);
        add_row(&mut grads.b_reset, &d_a_reset);
        accumulate_outer(&mut grads.w_cand, &x, &d_a_cand);
        accumulate_outer(&mut grads.u_cand, &gated, &d_a_cand);
        add_row(&mut grads.b_cand, &d_a_cand);

        let mut emb_row = grads.embedding.row_mut(step.id);
        emb_row += &d_x;

        d_h = d_h_prev;
    }
}

fn accumulate_outer(target: &mut Array2<f64>, left: &Array1<f64>, right: &Array1<f64>) {
    for (i, &l) in left.iter().enumerate() {
        for (j, &r) in right.iter().enumerate() {
            target[[i, j]] += l * r;
        }
    }
}

fn add_row(target: &mut Array2<f64>, row: &Array1<f64>) {
    let mut r = target.row_mut(0);
    r += row;
}

/// A trained GRU classifier: vocabulary, label set and weights.
#[derive(Debug, Clone)]
pub struct GruModel {
    pub config: GruConfig,
    /// Word list; embedding row = index + 2 (PAD and UNK are reserved).
    pub words: Vec<String>,
    pub labels: Vec<String>,
    pub params: GruParams,
    index: std::collections::HashMap<String, usize>,
}

impl GruModel {
    pub fn new(
        config: GruConfig,
        words: Vec<String>,
        labels: Vec<String>,
        params: GruParams,
    ) -> Self {
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i + 2))
            .collect();
        GruModel {
            config,
            words,
            labels,
            params,
            index,
        }
    }

    /// Map whitespace words to embedding ids, truncating to `max_words`.
    pub fn encode_words(&self, text: &str) -> Vec<usize> {
        text.split_whitespace()
            .take(self.config.max_words)
            .map(|w| self.index.get(w).copied().unwrap_or(GRU_UNK))
            .collect()
    }

    /// Deterministic (eval-mode) prediction over normalized text.
    pub fn predict(&self, normalized_text: &str) -> PredictionResult {
        let ids = self.encode_words(normalized_text);
        let (logits, _) = gru_forward(&ids, &self.params, 0.0, &mut Phase::Eval);
        let probs = softmax_vec(logits.as_slice().unwrap());
        PredictionResult::from_probs(&self.labels, &probs)
    }
}

/// Result of [`train_gru`]: the best-on-dev model plus its metric history.
pub struct GruTrainResult {
    pub model: GruModel,
    pub dev_accuracy: f64,
    pub best_epoch: usize,
    pub history: Vec<f64>,
}

fn word_index(words: &[String]) -> std::collections::HashMap<&str, usize> {
    words
        .iter()
        .enumerate()
        .map(|(i, w)| (w.as_str(), i + 2))
        .collect()
}

/// Minibatch cross-entropy training with dev-accuracy model selection.
pub fn train_gru(
    train: &LabeledDataset,
    dev: &LabeledDataset,
    cfg: &GruConfig,
    seed: u64,
) -> Result<GruTrainResult> {
    cfg.validate()?;
    if train.label_set != dev.label_set {
        return Err(Error::LabelSetMismatch(format!(
            "train {:?} vs dev {:?}",
            train.label_set, dev.label_set
        )));
    }
    if train.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if dev.is_empty() {
        return Err(Error::EmptyDevSet);
    }
    let labels = train.label_set.clone();
    let n_classes = labels.len();
    let words = mi_vocab(train, cfg.vocab_top_k)?;
    let index = word_index(&words);

    let encode = |text: &str| -> Vec<usize> {
        text.split_whitespace()
            .take(cfg.max_words)
            .map(|w| index.get(w).copied().unwrap_or(GRU_UNK))
            .collect()
    };
    let prepare = |ds: &LabeledDataset| -> Result<Vec<(Vec<usize>, usize)>> {
        ds.samples
            .iter()
            .map(|s| {
                let target = ds
                    .label_index(&s.label)
                    .ok_or_else(|| Error::LabelNotInTask {
                        label: s.label.clone(),
                    })?;
                Ok((encode(&s.text), target))
            })
            .collect()
    };
    let train_set = prepare(train)?;
    let dev_set = prepare(dev)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = GruParams::init(words.len() + 2, cfg, n_classes, &mut rng);
    let steps_per_epoch = train_set.len().div_ceil(cfg.batch_size);
    let mut optimizer = AdamW::new(
        &params,
        OptimizerConfig::with_learning_rate(cfg.learning_rate),
        steps_per_epoch * cfg.epochs,
    );

    let mut best: Option<(f64, usize, GruParams)> = None;
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let mut grads = crate::nn::zeros_like(&params);
            for &i in batch {
                let (ids, target) = &train_set[i];
                let (logits, cache) = gru_forward(
                    ids,
                    &params,
                    cfg.dropout,
                    &mut Phase::Train { rng: &mut rng },
                );
                let (_, d_logits) = cross_entropy(logits.as_slice().unwrap(), *target);
                let scale = 1.0 / batch.len() as f64;
                let d_logits = Array1::from_vec(d_logits) * scale;
                gru_backward(&d_logits, &params, &cache, &mut grads);
            }
            optimizer.step(&mut params, &grads);
        }

        let mut correct = 0usize;
        for (ids, target) in &dev_set {
            let (logits, _) = gru_forward(ids, &params, 0.0, &mut Phase::Eval);
            let probs = softmax_vec(logits.as_slice().unwrap());
            let predicted = argmax(&probs);
            if predicted == *target {
                correct += 1;
            }
        }
        let acc = correct as f64 / dev_set.len() as f64;
        history.push(acc);
        if best.as_ref().map_or(true, |(b, _, _)| acc > *b) {
            best = Some((acc, epoch, params.clone()));
        }
    }

    let (dev_accuracy, best_epoch, best_params) = best.expect("at least one epoch ran");
    Ok(GruTrainResult {
        model: GruModel::new(cfg.clone(), words, labels, best_params),
        dev_accuracy,
        best_epoch,
        history,
    })
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}
