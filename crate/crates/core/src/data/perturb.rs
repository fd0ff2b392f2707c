use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::ClientShard;
use crate::error::{Error, Result};
use crate::nn::ParamVector;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PerturbationSpec {
    /// Fraction of clients that are stragglers.
    pub straggler_fraction: f64,
    /// Scale `sigma`; the client at 1-based position `r` of the noise
    /// assignment gets standard deviation `(r - 1) * sigma / N`.
    pub noise_scale: f64,
    /// Permutation of client indices; drawn from the generator when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_assignment: Option<Vec<usize>>,
}

impl Default for PerturbationSpec {
    fn default() -> Self {
        PerturbationSpec {
            straggler_fraction: 0.0,
            noise_scale: 0.0,
            noise_assignment: None,
        }
    }
}

impl PerturbationSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.straggler_fraction) {
            return Err(Error::Config(format!(
                "straggler fraction {} outside [0, 1]",
                self.straggler_fraction
            )));
        }
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return Err(Error::Config(format!("invalid noise scale {}", self.noise_scale)));
        }
        Ok(())
    }
}

/// Per-client noise levels indexed by client: `sigma_k = (rank_k - 1) * sigma / N`.
pub fn noise_levels(num_clients: usize, sigma: f64, assignment: &[usize]) -> Result<Vec<f64>> {
    let mut levels = vec![f64::NAN; num_clients];
    if assignment.len() != num_clients {
        return Err(Error::Config("noise assignment must list every client once".into()));
    }
    for (pos, &k) in assignment.iter().enumerate() {
        if k >= num_clients || !levels[k].is_nan() {
            return Err(Error::Config("noise assignment must be a permutation of clients".into()));
        }
        levels[k] = pos as f64 * sigma / num_clients as f64;
    }
    Ok(levels)
}

/// Marks `floor(x * N)` uniformly chosen clients as stragglers and assigns noise levels.
pub fn assign_perturbations<R: Rng + ?Sized>(
    mut shards: Vec<ClientShard>,
    spec: &PerturbationSpec,
    rng: &mut R,
) -> Result<Vec<ClientShard>> {
    spec.validate()?;
    let n = shards.len();
    let stragglers = (spec.straggler_fraction * n as f64).floor() as usize;
    for s in &mut shards {
        s.is_straggler = false;
    }
    for k in rand::seq::index::sample(rng, n, stragglers.min(n)) {
        shards[k].is_straggler = true;
    }
    let assignment = match &spec.noise_assignment {
        Some(a) => a.clone(),
        None => {
            let mut a: Vec<usize> = (0..n).collect();
            a.shuffle(rng);
            a
        }
    };
    let levels = noise_levels(n, spec.noise_scale, &assignment)?;
    for (s, sigma) in shards.iter_mut().zip(levels) {
        s.sigma = sigma;
    }
    Ok(shards)
}

/// Epoch count for a selected straggler: uniform on `1..=epochs`.
pub fn straggler_epochs<R: Rng + ?Sized>(epochs: usize, rng: &mut R) -> usize {
    rng.random_range(1..=epochs)
}

/// Adds i.i.d. `N(0, sigma^2)` noise to every coordinate; `sigma = 0` is a no-op.
pub fn apply_update_noise<R: Rng + ?Sized>(params: &ParamVector, sigma: f64, rng: &mut R) -> Result<ParamVector> {
    if sigma == 0.0 {
        return Ok(params.clone());
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::Config(format!("noise level {sigma}: {e}")))?;
    let values = params.values().iter().map(|v| v + normal.sample(rng)).collect();
    params.with_values(values)
}
