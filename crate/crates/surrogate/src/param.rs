//! Named parameter tensors with accumulated gradients.

use oilpore_core::SplitMix64;

#[derive(Debug, Clone)]
pub struct ParamTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub w: Vec<f32>,
    pub g: Vec<f32>,
}

impl ParamTensor {
    pub fn zeros(name: impl Into<String>, shape: Vec<usize>) -> Self {
        let len: usize = shape.iter().product();
        Self {
            name: name.into(),
            shape,
            w: vec![0.0; len],
            g: vec![0.0; len],
        }
    }

    /// Uniform init on [-scale, scale].
    pub fn uniform(name: impl Into<String>, shape: Vec<usize>, scale: f64, rng: &mut SplitMix64) -> Self {
        let mut p = Self::zeros(name, shape);
        for w in p.w.iter_mut() {
            *w = rng.range_f64(-scale, scale) as f32;
        }
        p
    }

    pub fn constant(name: impl Into<String>, shape: Vec<usize>, value: f32) -> Self {
        let mut p = Self::zeros(name, shape);
        p.w.fill(value);
        p
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn zero_grad(&mut self) {
        self.g.fill(0.0);
    }
}

/// Stable-order traversal of a module's parameters.
pub trait HasParams {
    fn for_each_param(&self, f: &mut dyn FnMut(&ParamTensor));
    fn for_each_param_mut(&mut self, f: &mut dyn FnMut(&mut ParamTensor));

    fn parameter_count(&self) -> usize {
        let mut count = 0;
        self.for_each_param(&mut |p| count += p.len());
        count
    }

    fn zero_grads(&mut self) {
        self.for_each_param_mut(&mut |p| p.zero_grad());
    }
}
