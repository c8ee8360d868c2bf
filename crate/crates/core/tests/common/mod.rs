//! Shared oracles for the acceptance suite. Everything here is test-only
//! and independent of the implementation paths it checks.

use ndarray::Array2;
use tasnif::Tensors;

/// Central finite differences over every parameter of a model.
///
/// Returns the worst relative error and the tensor it occurred in.
/// `loss` must be deterministic in the parameters.
pub fn finite_difference_check<P, F>(
    params: &mut P,
    analytic: &P,
    mut loss: F,
    step: f64,
) -> (f64, String)
where
    P: Tensors + Clone,
    F: FnMut(&P) -> f64,
{
    let mut worst = 0.0f64;
    let mut worst_name = String::new();
    let tensor_count = params.tensors().len();
    for t in 0..tensor_count {
        let (name, shape) = {
            let tensors = params.tensors();
            (tensors[t].0.clone(), tensors[t].1.raw_dim())
        };
        for i in 0..shape[0] {
            for j in 0..shape[1] {
                let original = {
                    let mut tensors = params.tensors_mut();
                    let v = tensors[t].1[[i, j]];
                    tensors[t].1[[i, j]] = v + step;
                    v
                };
                let plus = loss(params);
                {
                    let mut tensors = params.tensors_mut();
                    tensors[t].1[[i, j]] = original - step;
                }
                let minus = loss(params);
                {
                    let mut tensors = params.tensors_mut();
                    tensors[t].1[[i, j]] = original;
                }
                let numeric = (plus - minus) / (2.0 * step);
                let a = analytic.tensors()[t].1[[i, j]];
                let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
                if rel > worst {
                    worst = rel;
                    worst_name = name.clone();
                }
            }
        }
    }
    (worst, worst_name)
}

/// Direct elementwise attention evaluation: per query row, weights are the
/// softmax of dot products over unmasked keys, and the output the weighted
/// value sum. No matrix ops shared with the implementation.
pub fn direct_attention(
    q: &Array2<f64>,
    k: &Array2<f64>,
    v: &Array2<f64>,
    mask: &[bool],
) -> Array2<f64> {
    let (n, d_k) = (q.nrows(), q.ncols());
    let m = k.nrows();
    let d_v = v.ncols();
    let scale = 1.0 / (d_k as f64).sqrt();
    let mut out = Array2::zeros((n, d_v));
    for i in 0..n {
        let logit = |j: usize| -> f64 {
            (0..d_k).map(|t| q[[i, t]] * k[[j, t]]).sum::<f64>() * scale
        };
        let max = (0..m)
            .filter(|&j| mask[j])
            .map(logit)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut denom = 0.0;
        let mut weights = vec![0.0; m];
        for (j, w) in weights.iter_mut().enumerate() {
            if mask[j] {
                *w = (logit(j) - max).exp();
                denom += *w;
            }
        }
        for j in 0..m {
            let w = weights[j] / denom;
            for t in 0..d_v {
                out[[i, t]] += w * v[[j, t]];
            }
        }
    }
    out
}
