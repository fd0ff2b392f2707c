#![allow(dead_code)]

use fedshap::data::make_synthetic;
use fedshap::nn::{batch_objective, model_average, Activation, Architecture, AveragingEntry, Dataset, ParamVector};
use fedshap::shapley::ValidationUtility;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent forward pass: walks the flat parameter vector layer by layer.
pub fn reference_loss(dims: &[usize], act: Activation, params: &[f64], data: &Dataset) -> (f64, f64) {
    let mut total = 0.0;
    let mut correct = 0usize;
    for i in 0..data.len() {
        let mut h: Vec<f64> = data.row(i).to_vec();
        let mut off = 0;
        for l in 0..dims.len() - 1 {
            let (inp, out) = (dims[l], dims[l + 1]);
            let w = &params[off..off + inp * out];
            let b = &params[off + inp * out..off + inp * out + out];
            off += inp * out + out;
            let mut z = vec![0.0; out];
            for r in 0..out {
                let mut s = b[r];
                for c in 0..inp {
                    s += w[r * inp + c] * h[c];
                }
                z[r] = s;
            }
            if l + 2 < dims.len() {
                for v in &mut z {
                    *v = match act {
                        Activation::Relu => v.max(0.0),
                        Activation::Tanh => v.tanh(),
                    };
                }
            }
            h = z;
        }
        let m = h.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + h.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        let y = data.label(i);
        total += lse - h[y];
        let best = (0..h.len()).fold(0, |a, j| if h[j] > h[a] { j } else { a });
        if best == y {
            correct += 1;
        }
    }
    (total / data.len() as f64, correct as f64 / data.len() as f64)
}

/// Relative error between the analytic batch gradient and central finite
/// differences for a random small MLP, optionally with a proximal anchor.
pub fn gradient_check(seed: u64, mu: f64) -> f64 {
    let mut r = rng(seed);
    let input = r.random_range(2..5);
    let hidden = r.random_range(2..6);
    let classes = r.random_range(2..5);
    let act = if seed.is_multiple_of(2) { Activation::Tanh } else { Activation::Relu };
    let arch = Architecture::new(vec![input, hidden, classes], act).unwrap();
    let data = make_synthetic(classes, input, 12, &mut r).unwrap();
    let params: Vec<f64> = (0..arch.num_params()).map(|_| r.random_range(-1.0..1.0)).collect();
    let anchor: Vec<f64> = (0..arch.num_params()).map(|_| r.random_range(-1.0..1.0)).collect();
    let idx: Vec<usize> = (0..data.len()).collect();
    let anchor_arg = if mu > 0.0 { Some((anchor.as_slice(), mu)) } else { None };
    let (_, grad) = batch_objective(&arch, &params, anchor_arg, &data, &idx);
    let h = 1e-6;
    let mut fd = vec![0.0; params.len()];
    for i in 0..params.len() {
        let mut p = params.clone();
        p[i] += h;
        let up = batch_objective(&arch, &p, anchor_arg, &data, &idx).0;
        p[i] -= 2.0 * h;
        let down = batch_objective(&arch, &p, anchor_arg, &data, &idx).0;
        fd[i] = (up - down) / (2.0 * h);
    }
    let diff: f64 = grad.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let norm: f64 = grad.iter().map(|a| a * a).sum::<f64>().sqrt() + fd.iter().map(|a| a * a).sum::<f64>().sqrt();
    diff / norm.max(1e-12)
}

/// A small FL-shaped game: random models around a server model, utility is
/// minus the validation loss of their weighted average.
pub struct FlGame {
    pub arch: Architecture,
    pub server: ParamVector,
    pub updates: Vec<ParamVector>,
    pub sizes: Vec<usize>,
    pub validation: Dataset,
}

impl FlGame {
    pub fn random(seed: u64, players: usize) -> Self {
        let mut r = rng(seed);
        let arch = Architecture::new(vec![4, 5, 3], Activation::Relu).unwrap();
        let validation = make_synthetic(3, 4, 60, &mut r).unwrap();
        let server = arch.init(&mut r);
        let updates = (0..players)
            .map(|_| {
                let spread = r.random_range(0.05..0.8);
                let v = server.values().iter().map(|w| w + spread * r.random_range(-1.0..1.0)).collect();
                server.with_values(v).unwrap()
            })
            .collect();
        let sizes = (0..players).map(|_| r.random_range(5..50)).collect();
        FlGame { arch, server, updates, sizes, validation }
    }

    pub fn utility(&self) -> ValidationUtility<'_> {
        let entries = self
            .updates
            .iter()
            .zip(&self.sizes)
            .enumerate()
            .map(|(k, (p, &n))| AveragingEntry { client: k, samples: n, params: p })
            .collect();
        ValidationUtility::new(&self.arch, &self.server, entries, &self.validation)
    }

    pub fn average_loss(&self, subset: &[usize]) -> f64 {
        if subset.is_empty() {
            return self.arch.evaluate(&self.server, &self.validation).unwrap().loss;
        }
        let entries: Vec<_> = subset
            .iter()
            .map(|&k| AveragingEntry { client: k, samples: self.sizes[k], params: &self.updates[k] })
            .collect();
        let avg = model_average(&entries).unwrap();
        self.arch.evaluate(&avg, &self.validation).unwrap().loss
    }
}
