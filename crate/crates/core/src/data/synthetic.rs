use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::nn::Dataset;

pub const DEFAULT_SEPARATION: f64 = 3.0;

/// Gaussian blobs with unit covariance, one per class.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SyntheticSpec {
    pub classes: usize,
    pub dim: usize,
    pub samples: usize,
    /// Distance between any two class means.
    pub separation: f64,
    /// Norm of a shared vector `offset / sqrt(dim) * 1` added to every class mean.
    #[serde(default)]
    pub offset: f64,
}

/// Class means. With `dim >= classes` they are scaled simplex vertices
/// `separation / sqrt(2) * e_c`; otherwise random directions at the same radius.
fn class_means<R: Rng + ?Sized>(spec: &SyntheticSpec, rng: &mut R) -> Vec<Vec<f64>> {
    let radius = spec.separation / std::f64::consts::SQRT_2;
    let shift = spec.offset / (spec.dim as f64).sqrt();
    (0..spec.classes)
        .map(|c| {
            if spec.dim >= spec.classes {
                let mut m = vec![shift; spec.dim];
                m[c] += radius;
                m
            } else {
                let v: Vec<f64> = (0..spec.dim).map(|_| StandardNormal.sample(rng)).collect();
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
                v.into_iter().map(|x| x * radius / norm + shift).collect()
            }
        })
        .collect()
}

pub fn make_synthetic_with<R: Rng + ?Sized>(spec: &SyntheticSpec, rng: &mut R) -> Result<Dataset> {
    if spec.classes == 0 || spec.dim == 0 {
        return Err(Error::Config("synthetic data needs at least one class and one feature".into()));
    }
    if spec.samples < spec.classes {
        return Err(Error::Input(format!(
            "{} samples cannot cover {} classes",
            spec.samples, spec.classes
        )));
    }
    let means = class_means(spec, rng);
    let mut labels: Vec<usize> = (0..spec.samples).map(|i| i % spec.classes).collect();
    labels.shuffle(rng);
    let mut features = Vec::with_capacity(spec.samples * spec.dim);
    for &y in &labels {
        for &mu in &means[y] {
            let z: f64 = StandardNormal.sample(rng);
            features.push(mu + z);
        }
    }
    Dataset::new(features, labels, spec.dim, spec.classes)
}

/// Balanced Gaussian blobs at the default separation.
pub fn make_synthetic<R: Rng + ?Sized>(classes: usize, dim: usize, samples: usize, rng: &mut R) -> Result<Dataset> {
    make_synthetic_with(
        &SyntheticSpec {
            classes,
            dim,
            samples,
            separation: DEFAULT_SEPARATION,
            offset: 0.0,
        },
        rng,
    )
}
