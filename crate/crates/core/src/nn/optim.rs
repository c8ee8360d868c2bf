//! Adam with decoupled weight decay and linear warmup.
//!
//! Weight decay is skipped for single-row tensors (biases and layer-norm
//! gains/biases), matching common transformer training practice. The
//! learning rate ramps linearly over the first `warmup_fraction` of the
//! planned steps and stays constant afterwards.

use crate::nn::{zeros_like, Tensors};

#[derive(Debug, Clone)]
pub struct OptimizerConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    pub warmup_fraction: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.01,
            warmup_fraction: 0.1,
        }
    }
}

impl OptimizerConfig {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        OptimizerConfig {
            learning_rate,
            ..OptimizerConfig::default()
        }
    }
}

pub struct AdamW<P: Tensors + Clone> {
    cfg: OptimizerConfig,
    first_moment: P,
    second_moment: P,
    step: usize,
    warmup_steps: usize,
}

impl<P: Tensors + Clone> AdamW<P> {
    pub fn new(params: &P, cfg: OptimizerConfig, total_steps: usize) -> Self {
        let warmup_steps = ((total_steps as f64) * cfg.warmup_fraction).ceil() as usize;
        AdamW {
            first_moment: zeros_like(params),
            second_moment: zeros_like(params),
            cfg,
            step: 0,
            warmup_steps,
        }
    }

    /// Effective learning rate for the step about to be taken.
    pub fn current_lr(&self) -> f64 {
        let step = self.step + 1;
        let scale = if self.warmup_steps > 0 && step <= self.warmup_steps {
            step as f64 / self.warmup_steps as f64
        } else {
            1.0
        };
        self.cfg.learning_rate * scale
    }

    /// Apply one update. `grads` must mirror `params`.
    pub fn step(&mut self, params: &mut P, grads: &P) {
        let lr = self.current_lr();
        self.step += 1;
        let bias1 = 1.0 - self.cfg.beta1.powi(self.step as i32);
        let bias2 = 1.0 - self.cfg.beta2.powi(self.step as i32);

        let mut p_tensors = params.tensors_mut();
        let g_tensors = grads.tensors();
        let mut m_tensors = self.first_moment.tensors_mut();
        let mut v_tensors = self.second_moment.tensors_mut();
        debug_assert_eq!(p_tensors.len(), g_tensors.len());

        for i in 0..p_tensors.len() {
            let (ref p_name, ref mut p) = p_tensors[i];
            let (ref g_name, g) = g_tensors[i];
            debug_assert_eq!(p_name, g_name, "parameter/gradient order mismatch");
            let m = &mut m_tensors[i].1;
            let v = &mut v_tensors[i].1;
            let decay = if p.nrows() > 1 { self.cfg.weight_decay } else { 0.0 };
            ndarray::Zip::from(&mut **p)
                .and(&mut **m)
                .and(&mut **v)
                .and(g)
                .for_each(|p, m, v, &g| {
                    *m = self.cfg.beta1 * *m + (1.0 - self.cfg.beta1) * g;
                    *v = self.cfg.beta2 * *v + (1.0 - self.cfg.beta2) * g * g;
                    let m_hat = *m / bias1;
                    let v_hat = *v / bias2;
                    *p -= lr * (m_hat / (v_hat.sqrt() + self.cfg.eps) + decay * *p);
                });
        }
    }
}
