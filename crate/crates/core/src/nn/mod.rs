//! Hand-rolled neural-network primitives.
//!
//! Everything trains through explicit forward/backward pairs on
//! `ndarray::Array2<f64>`; there is no autograd. Models expose their
//! trainable tensors through [`Tensors`], which is what the optimizer and
//! the finite-difference checks iterate over. All randomness flows through
//! an explicitly seeded [`ChaCha8Rng`] so training runs are reproducible
//! bit for bit.

pub mod attention;
pub mod encoder;
pub mod gru;
pub mod optim;

use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Stable, ordered access to every trainable tensor of a model.
///
/// `tensors()` and `tensors_mut()` must enumerate the same tensors in the
/// same order; gradient structures are mirrors of their parameter structure,
/// so zipping two enumerations pairs each parameter with its gradient.
pub trait Tensors {
    fn tensors(&self) -> Vec<(String, &Array2<f64>)>;
    fn tensors_mut(&mut self) -> Vec<(String, &mut Array2<f64>)>;
}

/// A zeroed mirror of `params`, used to accumulate gradients.
pub fn zeros_like<P: Tensors + Clone>(params: &P) -> P {
    let mut zeros = params.clone();
    for (_, t) in zeros.tensors_mut() {
        t.fill(0.0);
    }
    zeros
}

/// Symmetric uniform initialization scaled by `1/sqrt(fan_in)`.
pub fn uniform_init(rows: usize, cols: usize, fan_in: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let bound = 1.0 / (fan_in as f64).sqrt();
    Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-bound..bound))
}

/// A dense projection `y = x W + b` with `W: in×out`, `b: 1×out`.
#[derive(Debug, Clone)]
pub struct LinearParams {
    pub w: Array2<f64>,
    pub b: Array2<f64>,
}

impl LinearParams {
    pub fn init(inputs: usize, outputs: usize, rng: &mut ChaCha8Rng) -> Self {
        LinearParams {
            w: uniform_init(inputs, outputs, inputs, rng),
            b: Array2::zeros((1, outputs)),
        }
    }

    pub fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        x.dot(&self.w) + &self.b
    }

    /// Backpropagate `d_out`, accumulating into `grads` and returning `d_x`.
    pub fn backward(
        &self,
        x: &Array2<f64>,
        d_out: &Array2<f64>,
        grads: &mut LinearParams,
    ) -> Array2<f64> {
        grads.w += &x.t().dot(d_out);
        let col_sums = d_out.sum_axis(ndarray::Axis(0));
        grads.b += &col_sums.insert_axis(ndarray::Axis(0));
        d_out.dot(&self.w.t())
    }

    pub(crate) fn tensor_entries(&self, prefix: &str) -> Vec<(String, &Array2<f64>)> {
        vec![
            (format!("{prefix}.w"), &self.w),
            (format!("{prefix}.b"), &self.b),
        ]
    }

    pub(crate) fn tensor_entries_mut(&mut self, prefix: &str) -> Vec<(String, &mut Array2<f64>)> {
        vec![
            (format!("{prefix}.w"), &mut self.w),
            (format!("{prefix}.b"), &mut self.b),
        ]
    }
}

impl Tensors for LinearParams {
    fn tensors(&self) -> Vec<(String, &Array2<f64>)> {
        self.tensor_entries("linear")
    }
    fn tensors_mut(&mut self) -> Vec<(String, &mut Array2<f64>)> {
        self.tensor_entries_mut("linear")
    }
}

/// Feed-forward activation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    /// tanh-approximated GELU (the BERT convention).
    Gelu,
    Relu,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Gelu => {
                let inner = SQRT_2_OVER_PI * (x + GELU_COEFF * x * x * x);
                0.5 * x * (1.0 + inner.tanh())
            }
            Activation::Relu => x.max(0.0),
        }
    }

    /// Derivative at the pre-activation value.
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Gelu => {
                let inner = SQRT_2_OVER_PI * (x + GELU_COEFF * x * x * x);
                let t = inner.tanh();
                0.5 * (1.0 + t)
                    + 0.5 * x * (1.0 - t * t) * SQRT_2_OVER_PI * (1.0 + 3.0 * GELU_COEFF * x * x)
            }
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;
const GELU_COEFF: f64 = 0.044715;

impl std::str::FromStr for Activation {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "gelu" => Ok(Activation::Gelu),
            "relu" => Ok(Activation::Relu),
            other => Err(format!("unknown activation {other:?}")),
        }
    }
}

impl std::fmt::Display for Activation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Activation::Gelu => "gelu",
            Activation::Relu => "relu",
        })
    }
}

/// Whether a forward pass applies dropout (training) or not (inference).
pub enum Phase<'r> {
    Eval,
    Train { rng: &'r mut ChaCha8Rng },
}

impl Phase<'_> {
    pub fn is_train(&self) -> bool {
        matches!(self, Phase::Train { .. })
    }
}

/// Inverted-dropout mask: entries are `0` or `1/(1-rate)`.
pub fn dropout_mask(
    rows: usize,
    cols: usize,
    rate: f64,
    rng: &mut ChaCha8Rng,
) -> Array2<f64> {
    debug_assert!((0.0..1.0).contains(&rate));
    let keep = 1.0 - rate;
    Array2::from_shape_fn((rows, cols), |_| {
        if rng.gen::<f64>() < keep {
            1.0 / keep
        } else {
            0.0
        }
    })
}

/// Row-wise softmax in place, with max subtraction for stability.
pub fn softmax_rows(logits: &mut Array2<f64>) {
    for mut row in logits.rows_mut() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
}

/// Softmax of a single logit vector (given as a slice), numerically stable.
pub fn softmax_vec(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Cross-entropy of one logit row against an integer target.
///
/// Returns the loss and the gradient with respect to the logits
/// (`softmax - onehot`).
pub fn cross_entropy(logits: &[f64], target: usize) -> (f64, Vec<f64>) {
    debug_assert!(target < logits.len());
    let probs = softmax_vec(logits);
    let loss = -(probs[target].max(f64::MIN_POSITIVE)).ln();
    let mut grad = probs;
    grad[target] -= 1.0;
    (loss, grad)
}
