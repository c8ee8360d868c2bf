//! Supervised fine-tuning, prediction and the self-training wrapper.
//!
//! Fine-tuning trains the encoder plus a fresh softmax head over the pooled
//! CLS vector, evaluating the dev set after every epoch and keeping the
//! best checkpoint. Self-training repeatedly fine-tunes, pseudo-labels the
//! unlabeled pool with the most confident predictions, and grows the
//! labeled pool until nothing qualifies or the iteration budget is spent.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{LabeledDataset, TaskSpec, TextSample};
use crate::error::{Error, Result};
use crate::eval;
use crate::nn::encoder::{
    encoder_backward, encoder_forward, EncoderCache, EncoderConfig, EncoderParams,
};
use crate::nn::optim::{AdamW, OptimizerConfig};
use crate::nn::{cross_entropy, softmax_vec, zeros_like, LinearParams, Phase, Tensors};
use crate::normalize;
use crate::wordpiece::{self, TokenSequence, Vocabulary};

/// Which dev metric drives checkpoint selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionMetric {
    Accuracy,
    MacroF1,
}

impl std::str::FromStr for SelectionMetric {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "accuracy" => Ok(SelectionMetric::Accuracy),
            "macro_f1" | "macro-f1" => Ok(SelectionMetric::MacroF1),
            other => Err(format!("unknown selection metric {other:?}")),
        }
    }
}

impl std::fmt::Display for SelectionMetric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SelectionMetric::Accuracy => "accuracy",
            SelectionMetric::MacroF1 => "macro_f1",
        })
    }
}

/// Fine-tuning hyperparameters.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub max_len: usize,
    pub selection_metric: SelectionMetric,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 2e-5,
            epochs: 15,
            batch_size: 32,
            max_len: 50,
            selection_metric: SelectionMetric::Accuracy,
            seed: 42,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.learning_rate <= 0.0 && self.learning_rate != 0.0 {
            return Err(Error::InvalidConfig(
                "learning_rate must be non-negative".into(),
            ));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidConfig(
                "epochs and batch_size must be positive".into(),
            ));
        }
        if self.max_len < 3 {
            return Err(Error::MaxLenTooSmall(self.max_len));
        }
        Ok(())
    }
}

/// A predicted label with the full probability distribution over the
/// task's labels, in task label order.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionResult {
    pub label: String,
    pub distribution: Vec<(String, f64)>,
}

impl PredictionResult {
    /// Build from per-label probabilities; the label is the argmax, ties
    /// resolved by label-set order.
    pub fn from_probs(labels: &[String], probs: &[f64]) -> Self {
        debug_assert_eq!(labels.len(), probs.len());
        let mut best = 0;
        for (i, &p) in probs.iter().enumerate() {
            if p > probs[best] {
                best = i;
            }
        }
        PredictionResult {
            label: labels[best].clone(),
            distribution: labels
                .iter()
                .cloned()
                .zip(probs.iter().copied())
                .collect(),
        }
    }

    pub fn prob(&self, label: &str) -> Option<f64> {
        self.distribution
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, p)| *p)
    }

    /// The maximum probability: the model's confidence in its label.
    pub fn confidence(&self) -> f64 {
        self.distribution
            .iter()
            .map(|(_, p)| *p)
            .fold(0.0, f64::max)
    }
}

/// Encoder weights plus the classification head added at fine-tune time.
#[derive(Debug, Clone)]
pub struct ClassifierModel {
    pub encoder: EncoderParams,
    pub head: LinearParams,
}

impl Tensors for ClassifierModel {
    fn tensors(&self) -> Vec<(String, &Array2<f64>)> {
        let mut out = self.encoder.tensors();
        out.extend(self.head.tensor_entries("head"));
        out
    }
    fn tensors_mut(&mut self) -> Vec<(String, &mut Array2<f64>)> {
        let mut out = self.encoder.tensors_mut();
        out.extend(self.head.tensor_entries_mut("head"));
        out
    }
}

impl ClassifierModel {
    /// Class logits for an encoded sequence. Training mode also returns the
    /// encoder cache and pooled row for backpropagation.
    fn forward(
        &self,
        seq: &TokenSequence,
        config: &EncoderConfig,
        phase: &mut Phase<'_>,
    ) -> Result<(Vec<f64>, Array2<f64>, EncoderCache)> {
        let (hidden, cache) =
            encoder_forward(&seq.ids, &seq.mask, None, &self.encoder, config, phase)?;
        let pooled = hidden.row(0).insert_axis(ndarray::Axis(0)).to_owned();
        let logits = self.head.forward(&pooled);
        Ok((logits.row(0).to_vec(), pooled, cache))
    }
}

/// Output of [`finetune`]: the dev-best model and the metric trajectory.
pub struct FinetuneResult {
    pub model: ClassifierModel,
    pub best_metric: f64,
    pub best_epoch: usize,
    /// Dev metric after each epoch; `best_metric` is its maximum.
    pub history: Vec<f64>,
}

fn check_labels(dataset: &LabeledDataset, task: &TaskSpec) -> Result<()> {
    for sample in &dataset.samples {
        if !task.labels.contains(&sample.label) {
            return Err(Error::LabelNotInTask {
                label: sample.label.clone(),
            });
        }
    }
    Ok(())
}

fn encode_dataset(
    dataset: &LabeledDataset,
    task: &TaskSpec,
    vocab: &Vocabulary,
    max_len: usize,
) -> Result<Vec<(TokenSequence, usize)>> {
    dataset
        .samples
        .iter()
        .map(|sample| {
            let normalized = normalize::normalize(&sample.text, &task.normalize);
            let seq = wordpiece::encode(&normalized, vocab, max_len)?;
            let target = task
                .labels
                .iter()
                .position(|l| l == &sample.label)
                .ok_or_else(|| Error::LabelNotInTask {
                    label: sample.label.clone(),
                })?;
            Ok((seq, target))
        })
        .collect()
}

fn dev_metric(
    model: &ClassifierModel,
    dev: &[(TokenSequence, usize)],
    task: &TaskSpec,
    config: &EncoderConfig,
    metric: SelectionMetric,
) -> Result<f64> {
    let mut pred = Vec::with_capacity(dev.len());
    let mut gold = Vec::with_capacity(dev.len());
    for (seq, target) in dev {
        let (logits, _, _) = model.forward(seq, config, &mut Phase::Eval)?;
        let probs = softmax_vec(&logits);
        let result = PredictionResult::from_probs(&task.labels, &probs);
        pred.push(result.label);
        gold.push(task.labels[*target].clone());
    }
    match metric {
        SelectionMetric::Accuracy => eval::accuracy(&pred, &gold),
        SelectionMetric::MacroF1 => eval::macro_f1(&pred, &gold, &task.labels),
    }
}

/// Fine-tune the encoder with a fresh classification head.
///
/// The dev `selection_metric` is computed after every epoch; the best
/// checkpoint (ties keep the earliest) is returned together with the
/// full per-epoch history.
pub fn finetune(
    encoder: &EncoderParams,
    encoder_config: &EncoderConfig,
    task: &TaskSpec,
    train: &LabeledDataset,
    dev: &LabeledDataset,
    vocab: &Vocabulary,
    config: &TrainConfig,
) -> Result<FinetuneResult> {
    config.validate()?;
    encoder_config.validate()?;
    if dev.is_empty() {
        return Err(Error::EmptyDevSet);
    }
    if train.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    check_labels(train, task)?;
    check_labels(dev, task)?;

    let train_set = encode_dataset(train, task, vocab, config.max_len)?;
    let dev_set = encode_dataset(dev, task, vocab, config.max_len)?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let head = LinearParams::init(encoder_config.d_model, task.labels.len(), &mut rng);
    let mut model = ClassifierModel {
        encoder: encoder.clone(),
        head,
    };

    let steps_per_epoch = train_set.len().div_ceil(config.batch_size);
    let mut optimizer = AdamW::new(
        &model,
        OptimizerConfig::with_learning_rate(config.learning_rate),
        steps_per_epoch * config.epochs,
    );

    let mut best: Option<(f64, usize, ClassifierModel)> = None;
    let mut history = Vec::with_capacity(config.epochs);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            let mut grads = zeros_like(&model);
            for &i in batch {
                let (seq, target) = &train_set[i];
                let (logits, pooled, cache) =
                    model.forward(seq, encoder_config, &mut Phase::Train { rng: &mut rng })?;
                let (_, d_logits) = cross_entropy(&logits, *target);
                let d_logits = Array2::from_shape_vec((1, d_logits.len()), d_logits).unwrap()
                    / batch.len() as f64;
                let d_pooled = model.head.backward(&pooled, &d_logits, &mut grads.head);
                let mut d_hidden = Array2::zeros((seq.ids.len(), encoder_config.d_model));
                {
                    let mut row = d_hidden.row_mut(0);
                    row += &d_pooled.row(0);
                }
                encoder_backward(
                    &d_hidden,
                    &model.encoder,
                    encoder_config,
                    &cache,
                    &mut grads.encoder,
                );
            }
            optimizer.step(&mut model, &grads);
        }

        let metric = dev_metric(&model, &dev_set, task, encoder_config, config.selection_metric)?;
        history.push(metric);
        if best.as_ref().map_or(true, |(b, _, _)| metric > *b) {
            best = Some((metric, epoch, model.clone()));
        }
    }

    let (best_metric, best_epoch, model) = best.expect("epochs >= 1");
    Ok(FinetuneResult {
        model,
        best_metric,
        best_epoch,
        history,
    })
}

/// Deterministic prediction for one text: normalization and encoding are
/// applied per the task configuration, the distribution is the softmax of
/// the class logits.
///
/// Panics if `task.train.max_len < 3`; constructors validate this, so it
/// only trips on hand-built inconsistent specs.
pub fn predict(
    model: &ClassifierModel,
    encoder_config: &EncoderConfig,
    task: &TaskSpec,
    vocab: &Vocabulary,
    text: &str,
) -> PredictionResult {
    let normalized = normalize::normalize(text, &task.normalize);
    let seq = wordpiece::encode(&normalized, vocab, task.train.max_len)
        .expect("max_len validated at model construction");
    let (logits, _, _) = model
        .forward(&seq, encoder_config, &mut Phase::Eval)
        .expect("prediction forward pass cannot fail on a validated model");
    let probs = softmax_vec(&logits);
    PredictionResult::from_probs(&task.labels, &probs)
}

/// Self-training loop configuration.
#[derive(Debug, Clone)]
pub struct SelfTrainConfig {
    /// Minimum confidence for a pseudo-label to qualify.
    pub confidence_threshold: f64,
    /// Fraction of the scored pool (top by confidence) eligible per round.
    pub top_percent: f64,
    pub iterations: usize,
    /// Start each round from the previous round's weights instead of the
    /// original initialization.
    pub warm_start: bool,
}

impl Default for SelfTrainConfig {
    fn default() -> Self {
        SelfTrainConfig {
            confidence_threshold: 0.9,
            top_percent: 0.2,
            iterations: 3,
            warm_start: false,
        }
    }
}

/// One audit-log row per self-training iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct SelfTrainRecord {
    pub iteration: usize,
    /// Labeled-pool size this iteration trained on.
    pub pool_size: usize,
    pub dev_metric: f64,
    /// Pseudo-labeled samples moved into the pool after this iteration.
    pub added: usize,
}

pub struct SelfTrainResult {
    pub model: ClassifierModel,
    pub best_metric: f64,
    pub best_iteration: usize,
    pub log: Vec<SelfTrainRecord>,
}

/// Iterative pseudo-labeling: fine-tune, score the unlabeled pool, move the
/// most confident predictions (threshold ∩ top fraction) into the labeled
/// pool, and repeat. Returns the dev-best model across iterations.
///
/// Each iteration retrains from the original `encoder` weights unless
/// `warm_start` is set; iteration `i` seeds its run with `seed + i`, so an
/// empty unlabeled pool reproduces a plain [`finetune`] exactly.
pub fn self_train(
    encoder: &EncoderParams,
    encoder_config: &EncoderConfig,
    task: &TaskSpec,
    labeled: &LabeledDataset,
    unlabeled: &[String],
    dev: &LabeledDataset,
    vocab: &Vocabulary,
    train_config: &TrainConfig,
    st_config: &SelfTrainConfig,
) -> Result<SelfTrainResult> {
    if !(0.0..=1.0).contains(&st_config.confidence_threshold) {
        return Err(Error::BadThreshold(st_config.confidence_threshold));
    }
    if !(st_config.top_percent > 0.0 && st_config.top_percent <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "top_percent must lie in (0, 1], got {}",
            st_config.top_percent
        )));
    }
    if st_config.iterations == 0 {
        return Err(Error::InvalidConfig("iterations must be >= 1".into()));
    }
    if labeled.is_empty() {
        return Err(Error::EmptyCorpus);
    }

    let mut pool = labeled.clone();
    let mut remaining: Vec<(usize, String)> = unlabeled
        .iter()
        .cloned()
        .enumerate()
        .collect();
    let mut best: Option<(f64, usize, ClassifierModel)> = None;
    let mut warm_encoder: Option<EncoderParams> = None;
    let mut log = Vec::new();

    for iteration in 0..st_config.iterations {
        let iter_config = TrainConfig {
            seed: train_config.seed.wrapping_add(iteration as u64),
            ..train_config.clone()
        };
        let base = match (&warm_encoder, st_config.warm_start) {
            (Some(prev), true) => prev,
            _ => encoder,
        };
        let result = finetune(base, encoder_config, task, &pool, dev, vocab, &iter_config)?;
        let pool_size = pool.len();
        if st_config.warm_start {
            warm_encoder = Some(result.model.encoder.clone());
        }
        if best
            .as_ref()
            .map_or(true, |(b, _, _)| result.best_metric > *b)
        {
            best = Some((result.best_metric, iteration, result.model.clone()));
        }

        // Score what's left of the unlabeled pool with this round's model.
        let mut scored: Vec<(usize, usize, String, f64)> = remaining
            .iter()
            .enumerate()
            .map(|(slot, (_, text))| {
                let p = predict(&result.model, encoder_config, task, vocab, text);
                let confidence = p.confidence();
                (slot, remaining[slot].0, p.label, confidence)
            })
            .collect();
        scored.sort_by(|a, b| {
            b.3.partial_cmp(&a.3)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.1.cmp(&b.1))
        });
        let top_k = ((scored.len() as f64) * st_config.top_percent).ceil() as usize;
        let selected: Vec<(usize, String)> = scored
            .into_iter()
            .take(top_k)
            .filter(|(_, _, _, conf)| *conf >= st_config.confidence_threshold)
            .map(|(slot, _, label, _)| (slot, label))
            .collect();

        log.push(SelfTrainRecord {
            iteration,
            pool_size,
            dev_metric: result.best_metric,
            added: selected.len(),
        });
        if selected.is_empty() {
            break;
        }

        let mut slots: Vec<usize> = Vec::with_capacity(selected.len());
        for (slot, label) in &selected {
            pool.samples.push(TextSample {
                text: remaining[*slot].1.clone(),
                label: label.clone(),
                user_id: None,
                source: Some("self-train".to_string()),
            });
            slots.push(*slot);
        }
        // Remove highest slots first so earlier indices stay valid.
        slots.sort_unstable_by(|a, b| b.cmp(a));
        for slot in slots {
            remaining.remove(slot);
        }
    }

    let (best_metric, best_iteration, model) = best.expect("iterations >= 1");
    Ok(SelfTrainResult {
        model,
        best_metric,
        best_iteration,
        log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{TaskName, TextSample};
    use crate::nn::encoder::PositionalMode;
    use crate::nn::Activation;
    use crate::wordpiece::train_vocab;

    fn toy_task(max_len: usize) -> TaskSpec {
        let mut task = TaskSpec::builtin(TaskName::Sentiment);
        task.normalize.strip_diacritics = false;
        task.train = TrainConfig {
            learning_rate: 5e-3,
            epochs: 10,
            batch_size: 8,
            max_len,
            selection_metric: SelectionMetric::Accuracy,
            seed: 21,
        };
        task
    }

    fn toy_rows(n: usize, offset: usize) -> Vec<TextSample> {
        (0..n)
            .map(|i| {
                let i = i + offset;
                let (text, label) = if i % 2 == 0 {
                    (format!("farah tweet number {}", i), "positive")
                } else {
                    (format!("huzn tweet number {}", i), "negative")
                };
                TextSample {
                    text,
                    label: label.to_string(),
                    user_id: None,
                    source: None,
                }
            })
            .collect()
    }

    fn toy_dataset(n: usize, offset: usize) -> LabeledDataset {
        LabeledDataset {
            samples: toy_rows(n, offset),
            label_set: vec!["positive".into(), "negative".into()],
        }
    }

    fn toy_setup() -> (Vocabulary, EncoderConfig) {
        let corpus: Vec<String> = toy_rows(30, 0).into_iter().map(|s| s.text).collect();
        let vocab = train_vocab(&corpus, 60).unwrap();
        let config = EncoderConfig {
            num_layers: 1,
            d_model: 16,
            num_heads: 2,
            d_ff: 32,
            max_positions: 16,
            vocab_size: vocab.len(),
            dropout_rate: 0.1,
            positional: PositionalMode::Sinusoidal,
            activation: Activation::Gelu,
        };
        (vocab, config)
    }

    #[test]
    fn prediction_result_argmax_and_ties() {
        let labels = vec!["a".to_string(), "b".to_string(), "c".to_string()];
        let p = PredictionResult::from_probs(&labels, &[0.2, 0.5, 0.3]);
        assert_eq!(p.label, "b");
        assert_eq!(p.confidence(), 0.5);
        assert_eq!(p.prob("c"), Some(0.3));
        // Tie: first label in set order wins.
        let tie = PredictionResult::from_probs(&labels, &[0.4, 0.4, 0.2]);
        assert_eq!(tie.label, "a");
    }

    #[test]
    fn zero_learning_rate_returns_initial_params() {
        let (vocab, config) = toy_setup();
        let task = toy_task(12);
        let train = toy_dataset(8, 0);
        let dev = toy_dataset(4, 100);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let encoder = EncoderParams::init(&config, &mut rng);
        let cfg = TrainConfig {
            learning_rate: 0.0,
            epochs: 1,
            batch_size: 4,
            max_len: 12,
            selection_metric: SelectionMetric::Accuracy,
            seed: 5,
        };
        let result = finetune(&encoder, &config, &task, &train, &dev, &vocab, &cfg).unwrap();
        for ((_, a), (_, b)) in result
            .model
            .encoder
            .tensors()
            .iter()
            .zip(encoder.tensors().iter())
        {
            assert_eq!(a, b);
        }
        // Metric equals the untrained metric.
        let dev_set = encode_dataset(&dev, &task, &vocab, 12).unwrap();
        let untrained = dev_metric(
            &result.model,
            &dev_set,
            &task,
            &config,
            SelectionMetric::Accuracy,
        )
        .unwrap();
        assert_eq!(result.best_metric, untrained);
    }

    #[test]
    fn overfits_separable_toy_task() {
        let (vocab, config) = toy_setup();
        let task = toy_task(12);
        let train = toy_dataset(60, 0);
        let dev = toy_dataset(20, 200);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let encoder = EncoderParams::init(&config, &mut rng);
        let mut cfg = task.train.clone();
        cfg.epochs = 15;
        let result = finetune(&encoder, &config, &task, &train, &dev, &vocab, &cfg).unwrap();
        assert_eq!(result.best_metric, 1.0);
        assert_eq!(result.history.len(), 15);
        let max_hist = result.history.iter().cloned().fold(0.0, f64::max);
        assert_eq!(result.best_metric, max_hist);
    }

    #[test]
    fn rejects_unknown_labels_and_empty_dev() {
        let (vocab, config) = toy_setup();
        let task = toy_task(12);
        let mut train = toy_dataset(4, 0);
        train.samples[0].label = "sideways".into();
        let dev = toy_dataset(2, 50);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let encoder = EncoderParams::init(&config, &mut rng);
        match finetune(&encoder, &config, &task, &train, &dev, &vocab, &task.train) {
            Err(Error::LabelNotInTask { label }) => assert_eq!(label, "sideways"),
            other => panic!("expected LabelNotInTask, got {:?}", other.map(|_| ())),
        }
        let empty = LabeledDataset::new(task.labels.clone());
        assert!(matches!(
            finetune(&encoder, &config, &task, &toy_dataset(4, 0), &empty, &vocab, &task.train),
            Err(Error::EmptyDevSet)
        ));
    }

    #[test]
    fn predict_is_deterministic_and_normalized() {
        let (vocab, config) = toy_setup();
        let task = toy_task(12);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let encoder = EncoderParams::init(&config, &mut rng);
        let head = LinearParams::init(config.d_model, 2, &mut rng);
        let model = ClassifierModel { encoder, head };
        let a = predict(&model, &config, &task, &vocab, "farah tweet number 2");
        let b = predict(&model, &config, &task, &vocab, "farah tweet number 2");
        assert_eq!(a, b);
        let total: f64 = a.distribution.iter().map(|(_, p)| p).sum();
        assert!((total - 1.0).abs() < 1e-6);
        assert_eq!(a.distribution.len(), 2);
        // Empty text predicts from the CLS-only sequence.
        let empty = predict(&model, &config, &task, &vocab, "");
        assert!((empty.distribution.iter().map(|(_, p)| p).sum::<f64>() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn zero_head_gives_uniform_distribution() {
        let (vocab, config) = toy_setup();
        let task = toy_task(12);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let encoder = EncoderParams::init(&config, &mut rng);
        let head = LinearParams {
            w: Array2::zeros((config.d_model, 2)),
            b: Array2::zeros((1, 2)),
        };
        let model = ClassifierModel { encoder, head };
        let p = predict(&model, &config, &task, &vocab, "anything at all");
        assert!((p.prob("positive").unwrap() - 0.5).abs() < 1e-12);
        assert!((p.prob("negative").unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(p.label, "positive"); // tie → first label
    }

    #[test]
    fn self_train_empty_pool_equals_plain_finetune() {
        let (vocab, config) = toy_setup();
        let task = toy_task(12);
        let train = toy_dataset(12, 0);
        let dev = toy_dataset(6, 100);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let encoder = EncoderParams::init(&config, &mut rng);
        let mut cfg = task.train.clone();
        cfg.epochs = 3;
        let plain = finetune(&encoder, &config, &task, &train, &dev, &vocab, &cfg).unwrap();
        let st = self_train(
            &encoder,
            &config,
            &task,
            &train,
            &[],
            &dev,
            &vocab,
            &cfg,
            &SelfTrainConfig::default(),
        )
        .unwrap();
        assert_eq!(st.log.len(), 1);
        assert_eq!(st.log[0].added, 0);
        assert_eq!(st.best_metric, plain.best_metric);
        for ((_, a), (_, b)) in st.model.tensors().iter().zip(plain.model.tensors().iter()) {
            assert_eq!(a, b, "self-train with no unlabeled pool must be bitwise finetune");
        }
    }

    #[test]
    fn self_train_impossible_threshold_stops_after_one_iteration() {
        let (vocab, config) = toy_setup();
        let task = toy_task(12);
        let train = toy_dataset(12, 0);
        let dev = toy_dataset(6, 100);
        let unlabeled: Vec<String> = toy_rows(10, 300).into_iter().map(|s| s.text).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let encoder = EncoderParams::init(&config, &mut rng);
        let mut cfg = task.train.clone();
        cfg.epochs = 2;
        let st = self_train(
            &encoder,
            &config,
            &task,
            &train,
            &unlabeled,
            &dev,
            &vocab,
            &cfg,
            &SelfTrainConfig {
                confidence_threshold: 1.0 - 1e-12,
                ..SelfTrainConfig::default()
            },
        )
        .unwrap();
        assert_eq!(st.log.len(), 1);
        assert_eq!(st.log[0].added, 0);
        assert_eq!(st.log[0].pool_size, 12);
    }

    #[test]
    fn self_train_grows_pool_and_respects_threshold() {
        let (vocab, config) = toy_setup();
        let task = toy_task(12);
        let train = toy_dataset(10, 0);
        let dev = toy_dataset(10, 100);
        let unlabeled: Vec<String> = toy_rows(30, 400).into_iter().map(|s| s.text).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let encoder = EncoderParams::init(&config, &mut rng);
        let mut cfg = task.train.clone();
        cfg.epochs = 6;
        let st = self_train(
            &encoder,
            &config,
            &task,
            &train,
            &unlabeled,
            &dev,
            &vocab,
            &cfg,
            &SelfTrainConfig {
                confidence_threshold: 0.6,
                top_percent: 0.3,
                iterations: 3,
                warm_start: false,
            },
        )
        .unwrap();
        // Pool sizes never decrease and additions match the growth.
        for pair in st.log.windows(2) {
            assert_eq!(pair[1].pool_size, pair[0].pool_size + pair[0].added);
        }
        // Reproducibility of the full trajectory.
        let again = self_train(
            &encoder,
            &config,
            &task,
            &train,
            &unlabeled,
            &dev,
            &vocab,
            &cfg,
            &SelfTrainConfig {
                confidence_threshold: 0.6,
                top_percent: 0.3,
                iterations: 3,
                warm_start: false,
            },
        )
        .unwrap();
        assert_eq!(st.log, again.log);
    }

    #[test]
    fn self_train_validates_threshold() {
        let (vocab, config) = toy_setup();
        let task = toy_task(12);
        let ds = toy_dataset(4, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let encoder = EncoderParams::init(&config, &mut rng);
        let bad = SelfTrainConfig {
            confidence_threshold: 1.5,
            ..SelfTrainConfig::default()
        };
        assert!(matches!(
            self_train(&encoder, &config, &task, &ds, &[], &ds, &vocab, &task.train, &bad),
            Err(Error::BadThreshold(_))
        ));
    }
}
