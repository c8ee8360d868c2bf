//! Scaled dot-product and multi-head self-attention.
//!
//! Attention weights are `softmax(Q Kᵀ / sqrt(d_k))` over the unmasked key
//! positions; masked keys get a large negative logit (not −∞, which would
//! produce NaN rows) and end up with exactly zero weight after the
//! max-subtracted softmax underflows them.

use ndarray::{s, Array2};

use crate::error::{Error, Result};
use crate::nn::{dropout_mask, softmax_rows, Phase};

/// Logit assigned to masked key positions.
const MASKED_LOGIT: f64 = -1e9;

fn check_shapes(q: &Array2<f64>, k: &Array2<f64>, v: &Array2<f64>, mask: &[bool]) -> Result<()> {
    if q.ncols() != k.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "query width {} != key width {}",
            q.ncols(),
            k.ncols()
        )));
    }
    if k.nrows() != v.nrows() {
        return Err(Error::ShapeMismatch(format!(
            "key count {} != value count {}",
            k.nrows(),
            v.nrows()
        )));
    }
    if mask.len() != k.nrows() {
        return Err(Error::ShapeMismatch(format!(
            "mask length {} != key count {}",
            mask.len(),
            k.nrows()
        )));
    }
    if !mask.iter().any(|&m| m) {
        return Err(Error::FullyMaskedRow);
    }
    Ok(())
}

/// `softmax(Q Kᵀ / sqrt(d_k)) V` with zero weight on masked key positions.
pub fn scaled_dot_attention(
    q: &Array2<f64>,
    k: &Array2<f64>,
    v: &Array2<f64>,
    mask: &[bool],
) -> Result<Array2<f64>> {
    let (out, _) = scaled_dot_attention_with_weights(q, k, v, mask)?;
    Ok(out)
}

/// As [`scaled_dot_attention`], additionally returning the weight matrix.
pub fn scaled_dot_attention_with_weights(
    q: &Array2<f64>,
    k: &Array2<f64>,
    v: &Array2<f64>,
    mask: &[bool],
) -> Result<(Array2<f64>, Array2<f64>)> {
    check_shapes(q, k, v, mask)?;
    let scale = 1.0 / (q.ncols() as f64).sqrt();
    let mut logits = q.dot(&k.t()) * scale;
    for (j, &valid) in mask.iter().enumerate() {
        if !valid {
            logits.column_mut(j).fill(MASKED_LOGIT);
        }
    }
    softmax_rows(&mut logits);
    let out = logits.dot(v);
    Ok((out, logits))
}

/// Projection weights of one multi-head self-attention sublayer.
#[derive(Debug, Clone)]
pub struct AttentionParams {
    pub wq: Array2<f64>,
    pub bq: Array2<f64>,
    pub wk: Array2<f64>,
    pub bk: Array2<f64>,
    pub wv: Array2<f64>,
    pub bv: Array2<f64>,
    pub wo: Array2<f64>,
    pub bo: Array2<f64>,
}

impl AttentionParams {
    pub fn init(d_model: usize, rng: &mut rand_chacha::ChaCha8Rng) -> Self {
        let proj = |rng: &mut rand_chacha::ChaCha8Rng| {
            crate::nn::uniform_init(d_model, d_model, d_model, rng)
        };
        AttentionParams {
            wq: proj(rng),
            bq: Array2::zeros((1, d_model)),
            wk: proj(rng),
            bk: Array2::zeros((1, d_model)),
            wv: proj(rng),
            bv: Array2::zeros((1, d_model)),
            wo: proj(rng),
            bo: Array2::zeros((1, d_model)),
        }
    }

    pub(crate) fn entries(&self, prefix: &str) -> Vec<(String, &Array2<f64>)> {
        vec![
            (format!("{prefix}.wq"), &self.wq),
            (format!("{prefix}.bq"), &self.bq),
            (format!("{prefix}.wk"), &self.wk),
            (format!("{prefix}.bk"), &self.bk),
            (format!("{prefix}.wv"), &self.wv),
            (format!("{prefix}.bv"), &self.bv),
            (format!("{prefix}.wo"), &self.wo),
            (format!("{prefix}.bo"), &self.bo),
        ]
    }

    pub(crate) fn entries_mut(&mut self, prefix: &str) -> Vec<(String, &mut Array2<f64>)> {
        vec![
            (format!("{prefix}.wq"), &mut self.wq),
            (format!("{prefix}.bq"), &mut self.bq),
            (format!("{prefix}.wk"), &mut self.wk),
            (format!("{prefix}.bk"), &mut self.bk),
            (format!("{prefix}.wv"), &mut self.wv),
            (format!("{prefix}.bv"), &mut self.bv),
            (format!("{prefix}.wo"), &mut self.wo),
            (format!("{prefix}.bo"), &mut self.bo),
        ]
    }
}

/// Activations cached by the forward pass for backpropagation.
pub struct AttentionCache {
    q: Array2<f64>,
    k: Array2<f64>,
    v: Array2<f64>,
    /// Per-head attention weights, pre-dropout.
    probs: Vec<Array2<f64>>,
    /// Per-head inverted-dropout masks (train mode only).
    drop_masks: Option<Vec<Array2<f64>>>,
    concat: Array2<f64>,
}

/// Multi-head self-attention over `x` (seq_len × d_model).
///
/// Heads are contiguous column slices of the shared Q/K/V projections;
/// outputs are concatenated and projected by `wo`. In train phase, dropout
/// is applied to the attention weights.
pub fn multi_head_forward(
    x: &Array2<f64>,
    params: &AttentionParams,
    mask: &[bool],
    num_heads: usize,
    dropout_rate: f64,
    phase: &mut Phase<'_>,
) -> Result<(Array2<f64>, AttentionCache)> {
    let d_model = x.ncols();
    debug_assert_eq!(d_model % num_heads, 0);
    let d_k = d_model / num_heads;
    let seq_len = x.nrows();

    let q = x.dot(&params.wq) + &params.bq;
    let k = x.dot(&params.wk) + &params.bk;
    let v = x.dot(&params.wv) + &params.bv;

    let mut probs = Vec::with_capacity(num_heads);
    let mut drop_masks = if phase.is_train() && dropout_rate > 0.0 {
        Some(Vec::with_capacity(num_heads))
    } else {
        None
    };
    let mut concat = Array2::zeros((seq_len, d_model));
    for h in 0..num_heads {
        let cols = s![.., h * d_k..(h + 1) * d_k];
        let qh = q.slice(cols);
        let kh = k.slice(cols);
        let vh = v.slice(cols);
        let (_, weights) = scaled_dot_attention_with_weights(
            &qh.to_owned(),
            &kh.to_owned(),
            &vh.to_owned(),
            mask,
        )?;
        let applied = match (&mut drop_masks, &mut *phase) {
            (Some(masks), Phase::Train { rng }) => {
                let m = dropout_mask(seq_len, seq_len, dropout_rate, rng);
                let dropped = &weights * &m;
                masks.push(m);
                dropped
            }
            _ => weights.clone(),
        };
        concat.slice_mut(cols).assign(&applied.dot(&vh));
        probs.push(weights);
    }
    let out = concat.dot(&params.wo) + &params.bo;
    Ok((
        out,
        AttentionCache {
            q,
            k,
            v,
            probs,
            drop_masks,
            concat,
        },
    ))
}

/// The inference-mode multi-head attention operation.
pub fn multi_head_attention(
    x: &Array2<f64>,
    params: &AttentionParams,
    mask: &[bool],
    num_heads: usize,
) -> Result<Array2<f64>> {
    let (out, _) = multi_head_forward(x, params, mask, num_heads, 0.0, &mut Phase::Eval)?;
    Ok(out)
}

/// Backpropagate through multi-head attention, accumulating parameter
/// gradients into `grads` and returning the gradient with respect to `x`.
pub fn multi_head_backward(
    d_out: &Array2<f64>,
    x: &Array2<f64>,
    params: &AttentionParams,
    cache: &AttentionCache,
    num_heads: usize,
    grads: &mut AttentionParams,
) -> Array2<f64> {
    let d_model = x.ncols();
    let d_k = d_model / num_heads;
    let scale = 1.0 / (d_k as f64).sqrt();
    let seq_len = x.nrows();

    grads.wo += &cache.concat.t().dot(d_out);
    grads.bo += &d_out.sum_axis(ndarray::Axis(0)).insert_axis(ndarray::Axis(0));
    let d_concat = d_out.dot(&params.wo.t());

    let mut d_q = Array2::zeros((seq_len, d_model));
    let mut d_k_full = Array2::zeros((seq_len, d_model));
    let mut d_v = Array2::zeros((seq_len, d_model));
    for h in 0..num_heads {
        let cols = s![.., h * d_k..(h + 1) * d_k];
        let qh = cache.q.slice(cols).to_owned();
        let kh = cache.k.slice(cols).to_owned();
        let vh = cache.v.slice(cols).to_owned();
        let weights = &cache.probs[h];
        let applied = match &cache.drop_masks {
            Some(masks) => weights * &masks[h],
            None => weights.clone(),
        };

        let d_head = d_concat.slice(cols).to_owned();
        let mut d_applied = d_head.dot(&vh.t());
        d_v.slice_mut(cols).assign(&applied.t().dot(&d_head));
        if let Some(masks) = &cache.drop_masks {
            d_applied *= &masks[h];
        }
        // Softmax backward, row by row: dl = p ⊙ (dp − ⟨dp, p⟩).
        let mut d_logits = d_applied;
        for (mut dl_row, p_row) in d_logits.rows_mut().into_iter().zip(weights.rows()) {
            let dot: f64 = dl_row
                .iter()
                .zip(p_row.iter())
                .map(|(dl, p)| dl * p)
                .sum();
            for (dl, &p) in dl_row.iter_mut().zip(p_row.iter()) {
                *dl = p * (*dl - dot);
            }
        }
        d_q.slice_mut(cols).assign(&(d_logits.dot(&kh) * scale));
        d_k_full
            .slice_mut(cols)
            .assign(&(d_logits.t().dot(&qh) * scale));
    }

    grads.wq += &x.t().dot(&d_q);
    grads.bq += &d_q.sum_axis(ndarray::Axis(0)).insert_axis(ndarray::Axis(0));
    grads.wk += &x.t().dot(&d_k_full);
    grads.bk += &d_k_full
        .sum_axis(ndarray::Axis(0))
        .insert_axis(ndarray::Axis(0));
    grads.wv += &x.t().dot(&d_v);
    grads.bv += &d_v.sum_axis(ndarray::Axis(0)).insert_axis(ndarray::Axis(0));

    d_q.dot(&params.wq.t()) + d_k_full.dot(&params.wk.t()) + d_v.dot(&params.wv.t())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Direct elementwise evaluation of the attention formula, kept
    /// independent of the matrix-op implementation above.
    fn brute_force_attention(
        q: &Array2<f64>,
        k: &Array2<f64>,
        v: &Array2<f64>,
        mask: &[bool],
    ) -> Array2<f64> {
        let n = q.nrows();
        let m = k.nrows();
        let d_k = q.ncols();
        let d_v = v.ncols();
        let mut out = Array2::zeros((n, d_v));
        for i in 0..n {
            let mut weights = vec![0.0f64; m];
            let mut denom = 0.0;
            let max_logit = (0..m)
                .filter(|&j| mask[j])
                .map(|j| {
                    (0..d_k).map(|t| q[[i, t]] * k[[j, t]]).sum::<f64>() / (d_k as f64).sqrt()
                })
                .fold(f64::NEG_INFINITY, f64::max);
            for (j, w) in weights.iter_mut().enumerate() {
                if mask[j] {
                    let logit =
                        (0..d_k).map(|t| q[[i, t]] * k[[j, t]]).sum::<f64>() / (d_k as f64).sqrt();
                    *w = (logit - max_logit).exp();
                    denom += *w;
                }
            }
            for j in 0..m {
                for t in 0..d_v {
                    out[[i, t]] += weights[j] / denom * v[[j, t]];
                }
            }
        }
        out
    }

    #[test]
    fn single_key_returns_the_value() {
        let q = arr2(&[[0.3, -2.0]]);
        let k = arr2(&[[5.0, 1.0]]);
        let v = arr2(&[[7.0, -3.0, 0.5]]);
        let out = scaled_dot_attention(&q, &k, &v, &[true]).unwrap();
        assert_eq!(out, v);
    }

    #[test]
    fn orthogonal_query_gives_unmasked_mean() {
        // Q orthogonal to all keys → equal logits → uniform weights.
        let q = arr2(&[[0.0, 0.0]]);
        let k = arr2(&[[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]);
        let v = arr2(&[[3.0], [6.0], [9.0]]);
        let out = scaled_dot_attention(&q, &k, &v, &[true, true, true]).unwrap();
        assert!((out[[0, 0]] - 6.0).abs() < 1e-12);
        let out = scaled_dot_attention(&q, &k, &v, &[true, false, true]).unwrap();
        assert!((out[[0, 0]] - 6.0).abs() < 1e-12);
    }

    #[test]
    fn matches_brute_force_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let q = Array2::from_shape_fn((3, 4), |_| rng.gen_range(-2.0..2.0));
            let k = Array2::from_shape_fn((3, 4), |_| rng.gen_range(-2.0..2.0));
            let v = Array2::from_shape_fn((3, 2), |_| rng.gen_range(-2.0..2.0));
            let mask = [true, rng.gen::<bool>(), true];
            let fast = scaled_dot_attention(&q, &k, &v, &mask).unwrap();
            let slow = brute_force_attention(&q, &k, &v, &mask);
            for (a, b) in fast.iter().zip(slow.iter()) {
                assert!((a - b).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn weights_sum_to_one_and_masked_keys_get_none() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let q = Array2::from_shape_fn((4, 5), |_| rng.gen_range(-1.0..1.0));
        let k = Array2::from_shape_fn((6, 5), |_| rng.gen_range(-1.0..1.0));
        let v = Array2::from_shape_fn((6, 3), |_| rng.gen_range(-1.0..1.0));
        let mask = [true, true, false, true, false, true];
        let (_, weights) = scaled_dot_attention_with_weights(&q, &k, &v, &mask).unwrap();
        for row in weights.rows() {
            assert!((row.sum() - 1.0).abs() < 1e-6);
            assert!(row[2] < 1e-12);
            assert!(row[4] < 1e-12);
        }
    }

    #[test]
    fn fully_masked_errors() {
        let q = arr2(&[[1.0]]);
        let k = arr2(&[[1.0]]);
        let v = arr2(&[[1.0]]);
        assert!(matches!(
            scaled_dot_attention(&q, &k, &v, &[false]),
            Err(Error::FullyMaskedRow)
        ));
    }

    #[test]
    fn one_head_with_identity_projections_is_plain_attention() {
        let d = 3;
        let params = AttentionParams {
            wq: Array2::eye(d),
            bq: Array2::zeros((1, d)),
            wk: Array2::eye(d),
            bk: Array2::zeros((1, d)),
            wv: Array2::eye(d),
            bv: Array2::zeros((1, d)),
            wo: Array2::eye(d),
            bo: Array2::zeros((1, d)),
        };
        let x = arr2(&[[0.1, -0.4, 0.9], [1.2, 0.3, -0.7]]);
        let mask = [true, true];
        let mha = multi_head_attention(&x, &params, &mask, 1).unwrap();
        let plain = scaled_dot_attention(&x, &x, &x, &mask).unwrap();
        for (a, b) in mha.iter().zip(plain.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn two_heads_match_manual_slice_computation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let d = 4;
        let params = AttentionParams::init(d, &mut rng);
        let x = Array2::from_shape_fn((2, d), |_| rng.gen_range(-1.0..1.0));
        let mask = [true, true];
        let out = multi_head_attention(&x, &params, &mask, 2).unwrap();

        // Hand-composed two-slice oracle.
        let q = x.dot(&params.wq) + &params.bq;
        let k = x.dot(&params.wk) + &params.bk;
        let v = x.dot(&params.wv) + &params.bv;
        let mut concat = Array2::zeros((2, d));
        for h in 0..2 {
            let cols = s![.., h * 2..(h + 1) * 2];
            let head = scaled_dot_attention(
                &q.slice(cols).to_owned(),
                &k.slice(cols).to_owned(),
                &v.slice(cols).to_owned(),
                &mask,
            )
            .unwrap();
            concat.slice_mut(cols).assign(&head);
        }
        let expected = concat.dot(&params.wo) + &params.bo;
        for (a, b) in out.iter().zip(expected.iter()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn output_shape_is_seq_by_d_model() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let params = AttentionParams::init(8, &mut rng);
        let x = Array2::from_shape_fn((5, 8), |_| rng.gen_range(-1.0..1.0));
        let out = multi_head_attention(&x, &params, &[true; 5], 4).unwrap();
        assert_eq!(out.shape(), &[5, 8]);
        assert!(out.iter().all(|v| v.is_finite()));
    }
}
