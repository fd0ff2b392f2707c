use rand::seq::SliceRandom;
use rand::Rng;

use super::{Architecture, Dataset, ParamVector};
use crate::error::{Error, Result};

/// Local training hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batches_per_epoch: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    /// FedProx proximal coefficient; zero disables the term.
    pub prox_mu: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 5,
            batches_per_epoch: 5,
            learning_rate: 0.01,
            momentum: 0.5,
            prox_mu: 0.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batches_per_epoch == 0 {
            return Err(Error::Config("epochs and batches per epoch must be at least 1".into()));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("invalid learning rate {}", self.learning_rate)));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config(format!("momentum {} outside [0, 1)", self.momentum)));
        }
        if !(self.prox_mu >= 0.0 && self.prox_mu.is_finite()) {
            return Err(Error::Config(format!("invalid proximal coefficient {}", self.prox_mu)));
        }
        Ok(())
    }
}

/// Shuffles `0..n` and cuts it into the epoch's mini-batches.
///
/// With `n >= batches` this yields `batches` contiguous slices of `n / batches`
/// rows, the last one taking the remainder. Smaller shards get one batch per
/// sample.
pub fn epoch_batches<R: Rng + ?Sized>(n: usize, batches: usize, rng: &mut R) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    if n < batches {
        return order.into_iter().map(|i| vec![i]).collect();
    }
    let size = n / batches;
    (0..batches)
        .map(|b| {
            let end = if b + 1 == batches { n } else { (b + 1) * size };
            order[b * size..end].to_vec()
        })
        .collect()
}

/// Client objective on one batch: mean cross-entropy plus
/// `mu / 2 * ||w - anchor||^2` when an anchor is given. Returns `(value, gradient)`.
pub fn batch_objective(
    arch: &Architecture,
    params: &[f64],
    anchor: Option<(&[f64], f64)>,
    data: &Dataset,
    indices: &[usize],
) -> (f64, Vec<f64>) {
    let mut grad = vec![0.0; params.len()];
    let scale = 1.0 / indices.len() as f64;
    let mut value = arch.accumulate_gradient(params, data, indices, scale, &mut grad) * scale;
    if let Some((anchor, mu)) = anchor {
        if mu > 0.0 {
            let mut sq = 0.0;
            for ((g, w), a) in grad.iter_mut().zip(params).zip(anchor) {
                let d = w - a;
                *g += mu * d;
                sq += d * d;
            }
            value += 0.5 * mu * sq;
        }
    }
    (value, grad)
}

/// Runs local SGD with momentum from `server` on `data`.
///
/// `epochs_override` replaces `cfg.epochs` for stragglers and must not exceed
/// it. The momentum buffer starts at zero and persists across the epochs of
/// this call only.
pub fn client_update<R: Rng + ?Sized>(
    arch: &Architecture,
    server: &ParamVector,
    data: &Dataset,
    cfg: &TrainConfig,
    epochs_override: Option<usize>,
    rng: &mut R,
) -> Result<ParamVector> {
    cfg.validate()?;
    arch.check_data(data)?;
    arch.check_params(server)?;
    let epochs = match epochs_override {
        Some(e) if e == 0 || e > cfg.epochs => {
            return Err(Error::Config(format!(
                "epoch override {e} outside 1..={}",
                cfg.epochs
            )))
        }
        Some(e) => e,
        None => cfg.epochs,
    };

    let anchor = (cfg.prox_mu > 0.0).then(|| (server.values(), cfg.prox_mu));
    let mut w = server.values().to_vec();
    let mut velocity = vec![0.0; w.len()];
    for epoch in 0..epochs {
        for (b, batch) in epoch_batches(data.len(), cfg.batches_per_epoch, rng).iter().enumerate() {
            let (_, grad) = batch_objective(arch, &w, anchor, data, batch);
            if let Some(i) = grad.iter().position(|g| !g.is_finite()) {
                return Err(Error::Training(format!(
                    "non-finite gradient at parameter {i} (epoch {epoch}, batch {b})"
                )));
            }
            for ((wi, vi), gi) in w.iter_mut().zip(velocity.iter_mut()).zip(&grad) {
                *vi = cfg.momentum * *vi + gi;
                *wi -= cfg.learning_rate * *vi;
            }
        }
    }
    server
        .with_values(w)
        .map_err(|e| Error::Training(format!("local training diverged: {e}")))
}
