//! Self-supervised pretraining: masked-token prediction plus
//! next-sentence classification, trained jointly.
//!
//! Pretraining corpora are UTF-8 text, one sentence per line, with a blank
//! line between documents. Sentence pairs never cross a document boundary
//! on the positive side; negatives are drawn from the whole corpus.

use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nn::encoder::{encoder_backward, encoder_forward, EncoderConfig, EncoderParams};
use crate::nn::optim::{AdamW, OptimizerConfig};
use crate::nn::{cross_entropy, zeros_like, LinearParams, Phase, Tensors};
use crate::wordpiece::{self, TokenSequence, Vocabulary};

/// Masking policy for selected positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskMode {
    /// Every selected token becomes `[MASK]`.
    Literal,
    /// 80% `[MASK]`, 10% random vocabulary token, 10% unchanged.
    Bert801010,
}

impl std::str::FromStr for MaskMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "literal" => Ok(MaskMode::Literal),
            "bert" | "bert-80-10-10" => Ok(MaskMode::Bert801010),
            other => Err(format!("unknown mask mode {other:?}")),
        }
    }
}

/// One masked-prediction training example.
#[derive(Debug, Clone)]
pub struct MlmExample {
    /// Ids after masking, same length as the source sequence.
    pub input_ids: Vec<usize>,
    /// Original ids at the masked positions, aligned with `positions`.
    pub target_ids: Vec<usize>,
    /// Masked position indices, ascending.
    pub positions: Vec<usize>,
}

/// Select and mask token positions of an encoded sequence.
///
/// Each real, non-special position is selected independently with
/// probability `mask_prob` (at least one position is forced). `[CLS]`,
/// `[SEP]` and padding are never selected.
pub fn make_mlm_example(
    seq: &TokenSequence,
    mask_prob: f64,
    mode: MaskMode,
    vocab: &Vocabulary,
    rng: &mut ChaCha8Rng,
) -> Result<MlmExample> {
    if !(mask_prob > 0.0 && mask_prob <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "mask_prob must lie in (0, 1], got {mask_prob}"
        )));
    }
    let eligible: Vec<usize> = seq
        .ids
        .iter()
        .enumerate()
        .filter(|&(i, &id)| {
            seq.mask[i] && id != wordpiece::CLS && id != wordpiece::SEP && id != wordpiece::PAD
        })
        .map(|(i, _)| i)
        .collect();
    if eligible.is_empty() {
        return Err(Error::NothingToMask);
    }

    let mut selected: Vec<usize> = eligible
        .iter()
        .copied()
        .filter(|_| rng.gen::<f64>() < mask_prob)
        .collect();
    if selected.is_empty() {
        selected.push(eligible[rng.gen_range(0..eligible.len())]);
    }

    let mut input_ids = seq.ids.clone();
    let mut target_ids = Vec::with_capacity(selected.len());
    for &pos in &selected {
        target_ids.push(seq.ids[pos]);
        input_ids[pos] = match mode {
            MaskMode::Literal => wordpiece::MASK,
            MaskMode::Bert801010 => {
                let roll = rng.gen::<f64>();
                if roll < 0.8 {
                    wordpiece::MASK
                } else if roll < 0.9 {
                    // Random non-special vocabulary token.
                    rng.gen_range(wordpiece::SPECIALS.len()..vocab.len())
                } else {
                    seq.ids[pos]
                }
            }
        };
    }
    Ok(MlmExample {
        input_ids,
        target_ids,
        positions: selected,
    })
}

/// An ordered sentence list with document boundaries.
#[derive(Debug, Clone)]
pub struct SentenceCorpus {
    sentences: Vec<String>,
    doc_of: Vec<usize>,
}

impl SentenceCorpus {
    /// Parse corpus text: one sentence per line, blank line between
    /// documents.
    pub fn from_text(text: &str) -> Self {
        let mut sentences = Vec::new();
        let mut doc_of = Vec::new();
        let mut doc = 0usize;
        let mut doc_has_lines = false;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                if doc_has_lines {
                    doc += 1;
                    doc_has_lines = false;
                }
                continue;
            }
            sentences.push(line.to_string());
            doc_of.push(doc);
            doc_has_lines = true;
        }
        SentenceCorpus { sentences, doc_of }
    }

    /// A single-document corpus from an ordered sentence list.
    pub fn from_sentences(sentences: Vec<String>) -> Self {
        let doc_of = vec![0; sentences.len()];
        SentenceCorpus { sentences, doc_of }
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn sentences(&self) -> &[String] {
        &self.sentences
    }

    fn has_successor(&self, i: usize) -> bool {
        i + 1 < self.sentences.len() && self.doc_of[i] == self.doc_of[i + 1]
    }
}

/// A next-sentence example: tokenized A and B plus the order label.
#[derive(Debug, Clone)]
pub struct NspPair {
    pub a_ids: Vec<usize>,
    pub b_ids: Vec<usize>,
    pub is_next: bool,
}

impl NspPair {
    /// Frame as `[CLS] A [SEP] B [SEP]`, padded to `max_len`, with segment
    /// ids (0 through the first `[SEP]`, 1 for B and its `[SEP]`).
    pub fn to_sequence(&self, max_len: usize) -> Result<(TokenSequence, Vec<usize>)> {
        if max_len < 5 {
            return Err(Error::MaxLenTooSmall(max_len));
        }
        let mut a = self.a_ids.clone();
        let mut b = self.b_ids.clone();
        // Trim the longer side until the framed pair fits.
        while a.len() + b.len() + 3 > max_len {
            if a.len() >= b.len() {
                a.pop();
            } else {
                b.pop();
            }
        }
        let mut ids = Vec::with_capacity(max_len);
        let mut segments = Vec::with_capacity(max_len);
        ids.push(wordpiece::CLS);
        segments.push(0);
        ids.extend(&a);
        segments.extend(std::iter::repeat(0).take(a.len()));
        ids.push(wordpiece::SEP);
        segments.push(0);
        ids.extend(&b);
        segments.extend(std::iter::repeat(1).take(b.len()));
        ids.push(wordpiece::SEP);
        segments.push(1);
        let length = ids.len();
        ids.resize(max_len, wordpiece::PAD);
        segments.resize(max_len, 0);
        let mask = (0..max_len).map(|i| i < length).collect();
        Ok((TokenSequence { ids, mask, length }, segments))
    }
}

/// Draw a sentence pair: with probability one half the true successor
/// (`is_next`), otherwise a uniformly random sentence that is neither A nor
/// its successor.
pub fn make_nsp_pair(
    corpus: &SentenceCorpus,
    vocab: &Vocabulary,
    rng: &mut ChaCha8Rng,
) -> Result<NspPair> {
    if corpus.len() < 2 {
        return Err(Error::CorpusTooSmall {
            needed: 2,
            got: corpus.len(),
        });
    }
    let starts: Vec<usize> = (0..corpus.len())
        .filter(|&i| corpus.has_successor(i))
        .collect();
    if starts.is_empty() {
        return Err(Error::CorpusTooSmall {
            needed: 2,
            got: corpus.len(),
        });
    }
    let a_idx = starts[rng.gen_range(0..starts.len())];
    let positive = rng.gen::<f64>() < 0.5;
    let b_idx = if positive {
        a_idx + 1
    } else {
        let candidates: Vec<usize> = (0..corpus.len())
            .filter(|&j| j != a_idx && j != a_idx + 1)
            .collect();
        if candidates.is_empty() {
            return Err(Error::NoNegativeCandidate);
        }
        candidates[rng.gen_range(0..candidates.len())]
    };
    let encode = |text: &str| -> Vec<usize> {
        wordpiece::tokenize(text, vocab)
            .iter()
            .map(|piece| vocab.id(piece).expect("tokenize emits vocab pieces"))
            .collect()
    };
    Ok(NspPair {
        a_ids: encode(&corpus.sentences[a_idx]),
        b_ids: encode(&corpus.sentences[b_idx]),
        is_next: positive,
    })
}

/// Encoder plus the two pretraining heads.
#[derive(Debug, Clone)]
pub struct PretrainModel {
    pub encoder: EncoderParams,
    /// Hidden state → vocabulary logits at masked positions.
    pub mlm_head: LinearParams,
    /// Pooled CLS → {not-next, is-next} logits.
    pub nsp_head: LinearParams,
}

impl PretrainModel {
    pub fn init(config: &EncoderConfig, rng: &mut ChaCha8Rng) -> Self {
        PretrainModel {
            encoder: EncoderParams::init(config, rng),
            mlm_head: LinearParams::init(config.d_model, config.vocab_size, rng),
            nsp_head: LinearParams::init(config.d_model, 2, rng),
        }
    }
}

impl Tensors for PretrainModel {
    fn tensors(&self) -> Vec<(String, &Array2<f64>)> {
        let mut out = self.encoder.tensors();
        out.extend(self.mlm_head.tensor_entries("mlm"));
        out.extend(self.nsp_head.tensor_entries("nsp"));
        out
    }
    fn tensors_mut(&mut self) -> Vec<(String, &mut Array2<f64>)> {
        let mut out = self.encoder.tensors_mut();
        out.extend(self.mlm_head.tensor_entries_mut("mlm"));
        out.extend(self.nsp_head.tensor_entries_mut("nsp"));
        out
    }
}

pub struct PretrainConfig {
    pub steps: usize,
    pub batch_size: usize,
    pub max_len: usize,
    pub mask_prob: f64,
    pub mask_mode: MaskMode,
    pub optimizer: OptimizerConfig,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        PretrainConfig {
            steps: 500,
            batch_size: 8,
            max_len: 32,
            mask_prob: 0.15,
            mask_mode: MaskMode::Literal,
            optimizer: OptimizerConfig::default(),
        }
    }
}

/// Per-step loss record: (masked-token loss per position, next-sentence
/// loss per pair).
#[derive(Debug, Clone, Copy)]
pub struct StepLosses {
    pub mlm: f64,
    pub nsp: f64,
}

pub struct PretrainStats {
    pub losses: Vec<StepLosses>,
}

impl PretrainStats {
    pub fn final_mlm_loss(&self) -> Option<f64> {
        self.losses.last().map(|l| l.mlm)
    }
}

/// Joint masked-token + next-sentence training.
///
/// Losses are reported per masked position (MLM) and per pair (NSP); the
/// optimized objective is their unweighted sum. `steps == 0` returns the
/// model unchanged.
pub fn pretrain(
    model: &mut PretrainModel,
    corpus: &SentenceCorpus,
    vocab: &Vocabulary,
    encoder_config: &EncoderConfig,
    config: &PretrainConfig,
    seed: u64,
) -> Result<PretrainStats> {
    encoder_config.validate()?;
    if config.max_len > encoder_config.max_positions {
        return Err(Error::InvalidConfig(format!(
            "max_len {} exceeds max_positions {}",
            config.max_len, encoder_config.max_positions
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut optimizer = AdamW::new(model, config.optimizer.clone(), config.steps);
    let mut losses = Vec::with_capacity(config.steps);

    for _ in 0..config.steps {
        // Assemble the batch first so the masked-position total is known
        // before gradients are scaled.
        let mut examples = Vec::with_capacity(config.batch_size);
        for _ in 0..config.batch_size {
            let pair = make_nsp_pair(corpus, vocab, &mut rng)?;
            let (seq, segments) = pair.to_sequence(config.max_len)?;
            let mlm = make_mlm_example(&seq, config.mask_prob, config.mask_mode, vocab, &mut rng)?;
            examples.push((pair, seq, segments, mlm));
        }
        let total_masked: usize = examples.iter().map(|(_, _, _, m)| m.positions.len()).sum();
        let batch = examples.len();

        let mut grads = zeros_like(model);
        let mut mlm_loss_sum = 0.0;
        let mut nsp_loss_sum = 0.0;
        for (pair, seq, segments, mlm) in &examples {
            let (hidden, cache) = encoder_forward(
                &mlm.input_ids,
                &seq.mask,
                Some(segments),
                &model.encoder,
                encoder_config,
                &mut Phase::Train { rng: &mut rng },
            )?;
            let mut d_hidden = Array2::zeros(hidden.raw_dim());

            // Masked-token loss at each masked position.
            for (&pos, &target) in mlm.positions.iter().zip(&mlm.target_ids) {
                let row = hidden.row(pos).insert_axis(ndarray::Axis(0)).to_owned();
                let logits = model.mlm_head.forward(&row);
                let (loss, d_logits) =
                    cross_entropy(logits.row(0).as_slice().unwrap(), target);
                mlm_loss_sum += loss;
                let d_logits =
                    Array2::from_shape_vec((1, d_logits.len()), d_logits).unwrap()
                        / total_masked as f64;
                let d_row = model.mlm_head.backward(&row, &d_logits, &mut grads.mlm_head);
                let mut target_row = d_hidden.row_mut(pos);
                target_row += &d_row.row(0);
            }

            // Next-sentence loss on the pooled CLS vector.
            let pooled = hidden.row(0).insert_axis(ndarray::Axis(0)).to_owned();
            let logits = model.nsp_head.forward(&pooled);
            let target = usize::from(pair.is_next);
            let (loss, d_logits) = cross_entropy(logits.row(0).as_slice().unwrap(), target);
            nsp_loss_sum += loss;
            let d_logits =
                Array2::from_shape_vec((1, d_logits.len()), d_logits).unwrap() / batch as f64;
            let d_pooled = model.nsp_head.backward(&pooled, &d_logits, &mut grads.nsp_head);
            let mut cls_row = d_hidden.row_mut(0);
            cls_row += &d_pooled.row(0);

            encoder_backward(
                &d_hidden,
                &model.encoder,
                encoder_config,
                &cache,
                &mut grads.encoder,
            );
        }

        optimizer.step(model, &grads);
        losses.push(StepLosses {
            mlm: mlm_loss_sum / total_masked.max(1) as f64,
            nsp: nsp_loss_sum / batch as f64,
        });
    }
    Ok(PretrainStats { losses })
}
