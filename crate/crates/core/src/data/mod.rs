//! Dataset ingestion, non-IID partitioning and heterogeneity perturbations.

mod idx;
mod partition;
mod perturb;
mod synthetic;

pub use idx::{load_idx, parse_idx_images, parse_idx_labels, IMAGE_MAGIC, LABEL_MAGIC};
pub use partition::{
    dirichlet_partition, power_law_fractions, power_law_inverse_cdf, round_sizes, sample_dirichlet,
    sample_power_law_sizes, uniform_sizes, ClientShard, LabelSampler, PartitionSpec, SizeLaw,
};
pub use perturb::{apply_update_noise, assign_perturbations, noise_levels, straggler_epochs, PerturbationSpec};
pub use synthetic::{make_synthetic, make_synthetic_with, SyntheticSpec, DEFAULT_SEPARATION};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::nn::Dataset;

/// Splits a held-out pool into two disjoint halves (validation, test) after a
/// seeded shuffle. An odd row goes to the test half.
pub fn split_validation_test<R: Rng + ?Sized>(pool: &Dataset, rng: &mut R) -> (Dataset, Dataset) {
    let mut order: Vec<usize> = (0..pool.len()).collect();
    order.shuffle(rng);
    let half = pool.len() / 2;
    (pool.subset(&order[..half]), pool.subset(&order[half..]))
}
