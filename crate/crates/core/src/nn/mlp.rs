use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;

use super::{Dataset, LayerShape, Layout, ParamVector};
use crate::error::{Error, Result};

/// Hidden-layer nonlinearity. The output layer is always linear (logits).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative expressed through the activation's output.
    #[inline]
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
        }
    }
}

/// Layer widths `[input, hidden..., classes]` plus the hidden activation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Architecture {
    dims: Vec<usize>,
    activation: Activation,
    layout: Arc<Layout>,
}

/// Mean cross-entropy and argmax accuracy over a dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    pub accuracy: f64,
}

const EVAL_CHUNK: usize = 512;

impl Architecture {
    pub fn new(dims: Vec<usize>, activation: Activation) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::Config("an MLP needs at least input and output widths".into()));
        }
        if dims.contains(&0) {
            return Err(Error::Config(format!("layer widths must be positive, got {dims:?}")));
        }
        let layers = dims
            .windows(2)
            .map(|w| LayerShape { rows: w[1], cols: w[0] })
            .collect();
        Ok(Architecture {
            dims,
            activation,
            layout: Arc::new(Layout::new(layers)),
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn num_classes(&self) -> usize {
        *self.dims.last().unwrap()
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    pub fn num_params(&self) -> usize {
        self.layout.total_len()
    }

    /// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
    pub fn init<R: Rng + ?Sized>(&self, rng: &mut R) -> ParamVector {
        let mut p = ParamVector::zeros(self.layout.clone());
        for (i, l) in self.layout.layers().iter().enumerate() {
            let limit = (6.0 / (l.rows + l.cols) as f64).sqrt();
            let off = self.layout.offset(i);
            for w in &mut p.values_mut()[off..off + l.weight_len()] {
                *w = rng.random_range(-limit..limit);
            }
        }
        p
    }

    pub(crate) fn check_data(&self, data: &Dataset) -> Result<()> {
        if data.is_empty() {
            return Err(Error::Input("dataset is empty".into()));
        }
        if data.dim() != self.input_dim() {
            return Err(Error::Config(format!(
                "feature dimension {} does not match model input {}",
                data.dim(),
                self.input_dim()
            )));
        }
        if data.num_classes() > self.num_classes() {
            return Err(Error::Config(format!(
                "dataset has {} classes but the model outputs {}",
                data.num_classes(),
                self.num_classes()
            )));
        }
        Ok(())
    }

    pub(crate) fn check_params(&self, params: &ParamVector) -> Result<()> {
        if **params.layout() != *self.layout {
            return Err(Error::Config("parameter layout does not match architecture".into()));
        }
        Ok(())
    }

    fn scratch(&self) -> Vec<Vec<f64>> {
        self.dims.iter().map(|&d| vec![0.0; d]).collect()
    }

    /// Fills `acts[0]` with `x` and `acts[l]` with each layer's output; the last is logits.
    fn forward_into(&self, params: &[f64], x: &[f64], acts: &mut [Vec<f64>]) {
        acts[0].copy_from_slice(x);
        let last = self.layout.layers().len() - 1;
        for (l, shape) in self.layout.layers().iter().enumerate() {
            let off = self.layout.offset(l);
            let w = &params[off..off + shape.weight_len()];
            let b = &params[off + shape.weight_len()..off + shape.len()];
            let (inputs, outputs) = acts.split_at_mut(l + 1);
            let input = &inputs[l];
            let out = &mut outputs[0];
            for r in 0..shape.rows {
                let row = &w[r * shape.cols..(r + 1) * shape.cols];
                let mut z = b[r];
                for (wi, xi) in row.iter().zip(input.iter()) {
                    z += wi * xi;
                }
                out[r] = if l == last { z } else { self.activation.apply(z) };
            }
        }
    }

    /// Returns logits for a single feature row.
    pub fn logits(&self, params: &ParamVector, x: &[f64]) -> Vec<f64> {
        let mut acts = self.scratch();
        self.forward_into(params.values(), x, &mut acts);
        acts.pop().unwrap()
    }

    fn eval_range(&self, params: &[f64], data: &Dataset, range: std::ops::Range<usize>) -> (f64, usize) {
        let mut acts = self.scratch();
        let mut loss = 0.0;
        let mut correct = 0;
        for i in range {
            self.forward_into(params, data.row(i), &mut acts);
            let logits = acts.last().unwrap();
            let y = data.label(i);
            loss += log_sum_exp(logits) - logits[y];
            if argmax(logits) == y {
                correct += 1;
            }
        }
        (loss, correct)
    }

    /// Mean cross-entropy and accuracy of `params` on `data`.
    ///
    /// Partial sums are taken over fixed 512-row chunks and reduced in chunk
    /// order, so the result does not depend on the thread pool.
    pub fn evaluate(&self, params: &ParamVector, data: &Dataset) -> Result<Evaluation> {
        self.check_data(data)?;
        self.check_params(params)?;
        let n = data.len();
        let chunks = n.div_ceil(EVAL_CHUNK);
        let partials: Vec<(f64, usize)> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let start = c * EVAL_CHUNK;
                self.eval_range(params.values(), data, start..(start + EVAL_CHUNK).min(n))
            })
            .collect();
        let (mut loss, mut correct) = (0.0, 0);
        for (l, c) in partials {
            loss += l;
            correct += c;
        }
        Ok(Evaluation {
            loss: loss / n as f64,
            accuracy: correct as f64 / n as f64,
        })
    }

    /// Sum of per-sample cross-entropy over `indices`; adds the gradient of
    /// that sum (scaled by `scale`) into `grad`.
    pub(crate) fn accumulate_gradient(
        &self,
        params: &[f64],
        data: &Dataset,
        indices: &[usize],
        scale: f64,
        grad: &mut [f64],
    ) -> f64 {
        let mut acts = self.scratch();
        let mut deltas = self.scratch();
        let layers = self.layout.layers();
        let last = layers.len() - 1;
        let mut total = 0.0;
        for &i in indices {
            self.forward_into(params, data.row(i), &mut acts);
            let y = data.label(i);
            let logits = &acts[last + 1];
            let lse = log_sum_exp(logits);
            total += lse - logits[y];
            let top = &mut deltas[last + 1];
            for (c, d) in top.iter_mut().enumerate() {
                *d = (logits[c] - lse).exp() - if c == y { 1.0 } else { 0.0 };
            }
            for l in (0..=last).rev() {
                let shape = layers[l];
                let off = self.layout.offset(l);
                let (lower, upper) = deltas.split_at_mut(l + 1);
                let delta = &upper[0];
                let input = &acts[l];
                {
                    let (gw, gb) = grad[off..off + shape.len()].split_at_mut(shape.weight_len());
                    for r in 0..shape.rows {
                        let d = delta[r] * scale;
                        if d == 0.0 {
                            continue;
                        }
                        gb[r] += d;
                        for (g, x) in gw[r * shape.cols..(r + 1) * shape.cols].iter_mut().zip(input) {
                            *g += d * x;
                        }
                    }
                }
                if l > 0 {
                    let w = &params[off..off + shape.weight_len()];
                    let below = &mut lower[l];
                    below.iter_mut().for_each(|v| *v = 0.0);
                    for r in 0..shape.rows {
                        let d = delta[r];
                        if d == 0.0 {
                            continue;
                        }
                        for (b, wi) in below.iter_mut().zip(&w[r * shape.cols..(r + 1) * shape.cols]) {
                            *b += wi * d;
                        }
                    }
                    for (b, a) in below.iter_mut().zip(input) {
                        *b *= self.activation.derivative_from_output(*a);
                    }
                }
            }
        }
        total
    }
}

fn log_sum_exp(z: &[f64]) -> f64 {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Index of the largest logit; ties go to the lowest index.
fn argmax(z: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in z.iter().enumerate().skip(1) {
        if v > z[best] {
            best = i;
        }
    }
    best
}

/// An architecture together with concrete parameters.
#[derive(Debug, Clone)]
pub struct MlpModel {
    pub arch: Architecture,
    pub params: ParamVector,
}

impl MlpModel {
    pub fn new(arch: Architecture, params: ParamVector) -> Result<Self> {
        arch.check_params(&params)?;
        Ok(MlpModel { arch, params })
    }
}

/// Mean cross-entropy loss and accuracy of `model` on `data`.
pub fn forward_loss(model: &MlpModel, data: &Dataset) -> Result<Evaluation> {
    model.arch.evaluate(&model.params, data)
}
