//! Transformer encoder with explicit backpropagation.
//!
//! Post-norm blocks in the original arrangement: self-attention, residual
//! add, layer norm, position-wise feed-forward, residual add, layer norm.
//! Token, segment and (sinusoidal or learned) positional embeddings are
//! summed at the bottom of the stack. Padding positions are masked as
//! attention keys; their rows are computed but never read by any head.

use ndarray::{Array1, Array2, Axis};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nn::attention::{
    multi_head_backward, multi_head_forward, AttentionCache, AttentionParams,
};
use crate::nn::{dropout_mask, uniform_init, Activation, Phase, Tensors};
use crate::wordpiece::TokenSequence;

const LAYER_NORM_EPS: f64 = 1e-5;

/// How sequence order enters the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PositionalMode {
    /// Fixed sin/cos table.
    Sinusoidal,
    /// A trained position-embedding matrix.
    Learned,
    /// No positional signal (useful for equivariance checks).
    Disabled,
}

impl std::str::FromStr for PositionalMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "sinusoidal" => Ok(PositionalMode::Sinusoidal),
            "learned" => Ok(PositionalMode::Learned),
            "disabled" => Ok(PositionalMode::Disabled),
            other => Err(format!("unknown positional mode {other:?}")),
        }
    }
}

impl std::fmt::Display for PositionalMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PositionalMode::Sinusoidal => "sinusoidal",
            PositionalMode::Learned => "learned",
            PositionalMode::Disabled => "disabled",
        })
    }
}

/// Architecture hyperparameters.
#[derive(Debug, Clone)]
pub struct EncoderConfig {
    pub num_layers: usize,
    pub d_model: usize,
    pub num_heads: usize,
    pub d_ff: usize,
    pub max_positions: usize,
    pub vocab_size: usize,
    pub dropout_rate: f64,
    pub positional: PositionalMode,
    pub activation: Activation,
}

impl EncoderConfig {
    /// Small CPU-friendly default: 2 layers, 64 hidden, 4 heads.
    pub fn desk_default(vocab_size: usize) -> Self {
        EncoderConfig {
            num_layers: 2,
            d_model: 64,
            num_heads: 4,
            d_ff: 256,
            max_positions: 64,
            vocab_size,
            dropout_rate: 0.1,
            positional: PositionalMode::Sinusoidal,
            activation: Activation::Gelu,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_model == 0 || self.num_heads == 0 {
            return Err(Error::InvalidConfig(
                "d_model and num_heads must be positive".into(),
            ));
        }
        if self.d_model % self.num_heads != 0 {
            return Err(Error::InvalidConfig(format!(
                "d_model {} not divisible by num_heads {}",
                self.d_model, self.num_heads
            )));
        }
        if self.positional == PositionalMode::Sinusoidal && self.d_model % 2 != 0 {
            return Err(Error::OddDModel(self.d_model));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::InvalidConfig(format!(
                "dropout_rate must lie in [0,1), got {}",
                self.dropout_rate
            )));
        }
        if self.vocab_size == 0 || self.max_positions == 0 {
            return Err(Error::InvalidConfig(
                "vocab_size and max_positions must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Sinusoidal position table: `PE[pos, 2i] = sin(pos / 10000^(2i/d))`,
/// `PE[pos, 2i+1] = cos(pos / 10000^(2i/d))`.
pub fn positional_encoding(max_positions: usize, d_model: usize) -> Result<Array2<f64>> {
    if d_model % 2 != 0 {
        return Err(Error::OddDModel(d_model));
    }
    let mut pe = Array2::zeros((max_positions, d_model));
    for pos in 0..max_positions {
        for i in 0..d_model / 2 {
            let rate = (pos as f64) / 10000f64.powf(2.0 * i as f64 / d_model as f64);
            pe[[pos, 2 * i]] = rate.sin();
            pe[[pos, 2 * i + 1]] = rate.cos();
        }
    }
    Ok(pe)
}

#[derive(Debug, Clone)]
pub struct LayerNormParams {
    pub gain: Array2<f64>,
    pub bias: Array2<f64>,
}

impl LayerNormParams {
    fn init(d: usize) -> Self {
        LayerNormParams {
            gain: Array2::ones((1, d)),
            bias: Array2::zeros((1, d)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FeedForwardParams {
    pub w1: Array2<f64>,
    pub b1: Array2<f64>,
    pub w2: Array2<f64>,
    pub b2: Array2<f64>,
}

impl FeedForwardParams {
    fn init(d_model: usize, d_ff: usize, rng: &mut ChaCha8Rng) -> Self {
        FeedForwardParams {
            w1: uniform_init(d_model, d_ff, d_model, rng),
            b1: Array2::zeros((1, d_ff)),
            w2: uniform_init(d_ff, d_model, d_ff, rng),
            b2: Array2::zeros((1, d_model)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EncoderLayerParams {
    pub attn: AttentionParams,
    pub ln1: LayerNormParams,
    pub ffn: FeedForwardParams,
    pub ln2: LayerNormParams,
}

/// All trainable encoder weights.
#[derive(Debug, Clone)]
pub struct EncoderParams {
    pub token_embedding: Array2<f64>,
    /// Two rows: segment A and segment B.
    pub segment_embedding: Array2<f64>,
    /// Present only in `PositionalMode::Learned`.
    pub position_embedding: Option<Array2<f64>>,
    pub layers: Vec<EncoderLayerParams>,
}

impl EncoderParams {
    pub fn init(config: &EncoderConfig, rng: &mut ChaCha8Rng) -> Self {
        let d = config.d_model;
        let token_embedding = uniform_init(config.vocab_size, d, d, rng);
        let segment_embedding = uniform_init(2, d, d, rng);
        let position_embedding = match config.positional {
            PositionalMode::Learned => Some(uniform_init(config.max_positions, d, d, rng)),
            _ => None,
        };
        let layers = (0..config.num_layers)
            .map(|_| EncoderLayerParams {
                attn: AttentionParams::init(d, rng),
                ln1: LayerNormParams::init(d),
                ffn: FeedForwardParams::init(d, config.d_ff, rng),
                ln2: LayerNormParams::init(d),
            })
            .collect();
        EncoderParams {
            token_embedding,
            segment_embedding,
            position_embedding,
            layers,
        }
    }
}

impl Tensors for EncoderParams {
    fn tensors(&self) -> Vec<(String, &Array2<f64>)> {
        let mut out = vec![
            ("token_embedding".to_string(), &self.token_embedding),
            ("segment_embedding".to_string(), &self.segment_embedding),
        ];
        if let Some(pe) = &self.position_embedding {
            out.push(("position_embedding".to_string(), pe));
        }
        for (i, layer) in self.layers.iter().enumerate() {
            out.extend(layer.attn.entries(&format!("layer{i}.attn")));
            out.push((format!("layer{i}.ln1.gain"), &layer.ln1.gain));
            out.push((format!("layer{i}.ln1.bias"), &layer.ln1.bias));
            out.push((format!("layer{i}.ffn.w1"), &layer.ffn.w1));
            out.push((format!("layer{i}.ffn.b1"), &layer.ffn.b1));
            out.push((format!("layer{i}.ffn.w2"), &layer.ffn.w2));
            out.push((format!("layer{i}.ffn.b2"), &layer.ffn.b2));
            out.push((format!("layer{i}.ln2.gain"), &layer.ln2.gain));
            out.push((format!("layer{i}.ln2.bias"), &layer.ln2.bias));
        }
        out
    }

    fn tensors_mut(&mut self) -> Vec<(String, &mut Array2<f64>)> {
        let mut out = vec![
            ("token_embedding".to_string(), &mut self.token_embedding),
            (
                "segment_embedding".to_string(),
                &mut self.segment_embedding,
            ),
        ];
        if let Some(pe) = &mut self.position_embedding {
            out.push(("position_embedding".to_string(), pe));
        }
        for (i, layer) in self.layers.iter_mut().enumerate() {
            out.extend(layer.attn.entries_mut(&format!("layer{i}.attn")));
            out.push((format!("layer{i}.ln1.gain"), &mut layer.ln1.gain));
            out.push((format!("layer{i}.ln1.bias"), &mut layer.ln1.bias));
            out.push((format!("layer{i}.ffn.w1"), &mut layer.ffn.w1));
            out.push((format!("layer{i}.ffn.b1"), &mut layer.ffn.b1));
            out.push((format!("layer{i}.ffn.w2"), &mut layer.ffn.w2));
            out.push((format!("layer{i}.ffn.b2"), &mut layer.ffn.b2));
            out.push((format!("layer{i}.ln2.gain"), &mut layer.ln2.gain));
            out.push((format!("layer{i}.ln2.bias"), &mut layer.ln2.bias));
        }
        out
    }
}

struct LayerNormCache {
    normalized: Array2<f64>,
    inv_std: Array1<f64>,
}

fn layer_norm_forward(x: &Array2<f64>, params: &LayerNormParams) -> (Array2<f64>, LayerNormCache) {
    let d = x.ncols() as f64;
    let mut normalized = Array2::zeros(x.raw_dim());
    let mut inv_std = Array1::zeros(x.nrows());
    for (i, row) in x.rows().into_iter().enumerate() {
        let mean = row.sum() / d;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d;
        let istd = 1.0 / (var + LAYER_NORM_EPS).sqrt();
        inv_std[i] = istd;
        for (j, &v) in row.iter().enumerate() {
            normalized[[i, j]] = (v - mean) * istd;
        }
    }
    let out = &normalized * &params.gain + &params.bias;
    (out, LayerNormCache { normalized, inv_std })
}

fn layer_norm_backward(
    d_out: &Array2<f64>,
    params: &LayerNormParams,
    cache: &LayerNormCache,
    grads: &mut LayerNormParams,
) -> Array2<f64> {
    let d = d_out.ncols() as f64;
    grads.gain += &(d_out * &cache.normalized)
        .sum_axis(Axis(0))
        .insert_axis(Axis(0));
    grads.bias += &d_out.sum_axis(Axis(0)).insert_axis(Axis(0));

    let d_normalized = d_out * &params.gain;
    let mut d_x = Array2::zeros(d_out.raw_dim());
    for i in 0..d_out.nrows() {
        let dn = d_normalized.row(i);
        let xhat = cache.normalized.row(i);
        let sum_dn: f64 = dn.sum();
        let sum_dn_xhat: f64 = dn.iter().zip(xhat.iter()).map(|(a, b)| a * b).sum();
        let istd = cache.inv_std[i];
        for j in 0..d_out.ncols() {
            d_x[[i, j]] = istd / d * (d * dn[j] - sum_dn - xhat[j] * sum_dn_xhat);
        }
    }
    d_x
}

struct LayerForwardCache {
    input: Array2<f64>,
    attn: AttentionCache,
    ln1: LayerNormCache,
    ln1_out: Array2<f64>,
    ffn_pre: Array2<f64>,
    ffn_act: Array2<f64>,
    ffn_drop: Option<Array2<f64>>,
    ln2: LayerNormCache,
}

/// Everything the backward pass needs from one forward pass.
pub struct EncoderCache {
    ids: Vec<usize>,
    segments: Vec<usize>,
    layers: Vec<LayerForwardCache>,
}

/// Run the encoder over a token id sequence.
///
/// `mask` marks real (non-padding) positions and is applied to attention
/// keys. `segments`, when given, selects the segment embedding row per
/// position (defaults to all-A). Dropout fires only in the train phase.
pub fn encoder_forward(
    ids: &[usize],
    mask: &[bool],
    segments: Option<&[usize]>,
    params: &EncoderParams,
    config: &EncoderConfig,
    phase: &mut Phase<'_>,
) -> Result<(Array2<f64>, EncoderCache)> {
    if ids.len() > config.max_positions {
        return Err(Error::SequenceTooLong {
            len: ids.len(),
            max: config.max_positions,
        });
    }
    if ids.len() != mask.len() {
        return Err(Error::ShapeMismatch(format!(
            "ids length {} != mask length {}",
            ids.len(),
            mask.len()
        )));
    }
    if let Some(segs) = segments {
        if segs.len() != ids.len() {
            return Err(Error::ShapeMismatch(format!(
                "segments length {} != ids length {}",
                segs.len(),
                ids.len()
            )));
        }
    }
    let seq_len = ids.len();
    let d = config.d_model;
    let segments: Vec<usize> = match segments {
        Some(s) => s.to_vec(),
        None => vec![0; seq_len],
    };

    let mut x = Array2::zeros((seq_len, d));
    for (pos, (&id, &seg)) in ids.iter().zip(segments.iter()).enumerate() {
        if id >= config.vocab_size {
            return Err(Error::UnknownId(id));
        }
        if seg >= 2 {
            return Err(Error::InvalidConfig(format!("segment id {seg} out of range")));
        }
        let mut row = x.row_mut(pos);
        row.assign(&params.token_embedding.row(id));
        row += &params.segment_embedding.row(seg);
    }
    match config.positional {
        PositionalMode::Sinusoidal => {
            let pe = positional_encoding(seq_len, d)?;
            x += &pe;
        }
        PositionalMode::Learned => {
            let table = params
                .position_embedding
                .as_ref()
                .expect("learned positional mode requires a position table");
            for pos in 0..seq_len {
                let mut row = x.row_mut(pos);
                row += &table.row(pos);
            }
        }
        PositionalMode::Disabled => {}
    }

    let mut layer_caches = Vec::with_capacity(config.num_layers);
    for layer in &params.layers {
        let input = x.clone();
        let (attn_out, attn_cache) = multi_head_forward(
            &input,
            &layer.attn,
            mask,
            config.num_heads,
            config.dropout_rate,
            phase,
        )?;
        let res1 = &input + &attn_out;
        let (ln1_out, ln1_cache) = layer_norm_forward(&res1, &layer.ln1);

        let ffn_pre = ln1_out.dot(&layer.ffn.w1) + &layer.ffn.b1;
        let ffn_act = ffn_pre.mapv(|v| config.activation.apply(v));
        let (ffn_fed, ffn_drop) = match phase {
            Phase::Train { rng } if config.dropout_rate > 0.0 => {
                let m = dropout_mask(ffn_act.nrows(), ffn_act.ncols(), config.dropout_rate, rng);
                (&ffn_act * &m, Some(m))
            }
            _ => (ffn_act.clone(), None),
        };
        let ffn_out = ffn_fed.dot(&layer.ffn.w2) + &layer.ffn.b2;
        let res2 = &ln1_out + &ffn_out;
        let (ln2_out, ln2_cache) = layer_norm_forward(&res2, &layer.ln2);

        layer_caches.push(LayerForwardCache {
            input,
            attn: attn_cache,
            ln1: ln1_cache,
            ln1_out,
            ffn_pre,
            ffn_act,
            ffn_drop,
            ln2: ln2_cache,
        });
        x = ln2_out;
    }

    Ok((
        x,
        EncoderCache {
            ids: ids.to_vec(),
            segments,
            layers: layer_caches,
        },
    ))
}

/// Convenience wrapper over [`encoder_forward`] for an encoded sequence.
pub fn forward_sequence(
    seq: &TokenSequence,
    params: &EncoderParams,
    config: &EncoderConfig,
    phase: &mut Phase<'_>,
) -> Result<(Array2<f64>, EncoderCache)> {
    encoder_forward(&seq.ids, &seq.mask, None, params, config, phase)
}

/// The CLS vector: row 0 of the final hidden states.
pub fn pooled_output(hidden: &Array2<f64>) -> Array1<f64> {
    hidden.row(0).to_owned()
}

/// Backpropagate `d_hidden` through the whole stack, accumulating into
/// `grads` (a zeroed mirror of the parameters).
pub fn encoder_backward(
    d_hidden: &Array2<f64>,
    params: &EncoderParams,
    config: &EncoderConfig,
    cache: &EncoderCache,
    grads: &mut EncoderParams,
) {
    let mut d_x = d_hidden.clone();
    for (layer, layer_cache, layer_grads) in zip_layers_rev(&params.layers, &cache.layers, &mut grads.layers)
    {
        // ln2
        let d_res2 = layer_norm_backward(&d_x, &layer.ln2, &layer_cache.ln2, &mut layer_grads.ln2);
        // res2 = ln1_out + ffn_out
        let d_ffn_out = d_res2.clone();
        let mut d_ln1_out = d_res2;

        // ffn_out = ffn_fed · w2 + b2
        let ffn_fed = match &layer_cache.ffn_drop {
            Some(m) => &layer_cache.ffn_act * m,
            None => layer_cache.ffn_act.clone(),
        };
        layer_grads.ffn.w2 += &ffn_fed.t().dot(&d_ffn_out);
        layer_grads.ffn.b2 += &d_ffn_out.sum_axis(Axis(0)).insert_axis(Axis(0));
        let mut d_ffn_act = d_ffn_out.dot(&layer.ffn.w2.t());
        if let Some(m) = &layer_cache.ffn_drop {
            d_ffn_act *= m;
        }
        let d_ffn_pre = &d_ffn_act * &layer_cache.ffn_pre.mapv(|v| config.activation.derivative(v));
        layer_grads.ffn.w1 += &layer_cache.ln1_out.t().dot(&d_ffn_pre);
        layer_grads.ffn.b1 += &d_ffn_pre.sum_axis(Axis(0)).insert_axis(Axis(0));
        d_ln1_out += &d_ffn_pre.dot(&layer.ffn.w1.t());

        // ln1
        let d_res1 =
            layer_norm_backward(&d_ln1_out, &layer.ln1, &layer_cache.ln1, &mut layer_grads.ln1);
        // res1 = input + attn_out
        let d_attn_out = d_res1.clone();
        let mut d_input = d_res1;
        d_input += &multi_head_backward(
            &d_attn_out,
            &layer_cache.input,
            &layer.attn,
            &layer_cache.attn,
            config.num_heads,
            &mut layer_grads.attn,
        );
        d_x = d_input;
    }

    // Embedding gradients.
    for (pos, (&id, &seg)) in cache.ids.iter().zip(cache.segments.iter()).enumerate() {
        let d_row = d_x.row(pos);
        let mut tok = grads.token_embedding.row_mut(id);
        tok += &d_row;
        let mut segr = grads.segment_embedding.row_mut(seg);
        segr += &d_row;
    }
    if config.positional == PositionalMode::Learned {
        let table = grads
            .position_embedding
            .as_mut()
            .expect("learned positional mode requires a position table");
        for pos in 0..cache.ids.len() {
            let mut row = table.row_mut(pos);
            row += &d_x.row(pos);
        }
    }
}

/// Zip layers, caches and gradient layers in reverse order.
fn zip_layers_rev<'a>(
    layers: &'a [EncoderLayerParams],
    caches: &'a [LayerForwardCache],
    grads: &'a mut [EncoderLayerParams],
) -> impl Iterator<Item = (&'a EncoderLayerParams, &'a LayerForwardCache, &'a mut EncoderLayerParams)>
{
    layers
        .iter()
        .rev()
        .zip(caches.iter().rev())
        .zip(grads.iter_mut().rev())
        .map(|((l, c), g)| (l, c, g))
}
