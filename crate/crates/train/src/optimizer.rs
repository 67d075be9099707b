//! Adam optimizer over the model's traversal-ordered parameter tensors.

use crate::schedule::TrainConfig;
use oilpore_surrogate::{HasParams, SurrogateModel};

pub struct Adam {
    m: Vec<Vec<f32>>,
    v: Vec<Vec<f32>>,
    t: u64,
    beta1: f64,
    beta2: f64,
    eps: f64,
}

impl Adam {
    pub fn new(model: &SurrogateModel, cfg: &TrainConfig) -> Self {
        let mut m = Vec::new();
        model.for_each_param(&mut |p| m.push(vec![0.0f32; p.len()]));
        let v = m.clone();
        Self {
            m,
            v,
            t: 0,
            beta1: cfg.adam_beta1,
            beta2: cfg.adam_beta2,
            eps: cfg.adam_eps,
        }
    }

    /// One update from the accumulated gradients (scaled by `grad_scale`,
    /// typically 1/batch) at learning rate `lr`.
    pub fn step(&mut self, model: &mut SurrogateModel, lr: f64, grad_scale: f64) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        let (b1, b2) = (self.beta1 as f32, self.beta2 as f32);
        let scale = grad_scale as f32;
        let mut slot = 0usize;
        model.for_each_param_mut(&mut |p| {
            let m = &mut self.m[slot];
            let v = &mut self.v[slot];
            for i in 0..p.len() {
                let g = p.g[i] * scale;
                m[i] = b1 * m[i] + (1.0 - b1) * g;
                v[i] = b2 * v[i] + (1.0 - b2) * g * g;
                let m_hat = m[i] as f64 / bc1;
                let v_hat = v[i] as f64 / bc2;
                p.w[i] -= (lr * m_hat / (v_hat.sqrt() + self.eps)) as f32;
            }
            slot += 1;
        });
    }
}
