use std::path::PathBuf;

use crate::data::{
    assign_perturbations, dirichlet_partition, load_idx, make_synthetic_with, sample_power_law_sizes,
    split_validation_test, uniform_sizes, ClientShard, SizeLaw, SyntheticSpec,
};
use crate::error::{Error, Result};
use crate::nn::{Architecture, Dataset};
use crate::rng::{stream_rng, Stream};

use super::{DataSource, SimConfig};

/// Everything a run needs besides its configuration.
#[derive(Debug, Clone)]
pub struct FederatedData {
    pub shards: Vec<ClientShard>,
    pub validation: Dataset,
    pub test: Dataset,
    /// Union of all shards, used by the centralized baseline.
    pub train: Dataset,
    pub arch: Architecture,
}

impl FederatedData {
    pub fn sizes(&self) -> Vec<usize> {
        self.shards.iter().map(ClientShard::len).collect()
    }
}

fn idx_dir(explicit: &Option<PathBuf>, sub: &str) -> Result<PathBuf> {
    if let Some(d) = explicit {
        return Ok(d.clone());
    }
    let root = std::env::var_os("FEDSHAP_DATA_DIR")
        .ok_or_else(|| Error::Config(format!("set FEDSHAP_DATA_DIR to locate the {sub} IDX files")))?;
    Ok(PathBuf::from(root).join(sub))
}

fn find(dir: &std::path::Path, stem: &str) -> Result<PathBuf> {
    for name in [stem.to_string(), format!("{stem}.gz")] {
        let p = dir.join(&name);
        if p.exists() {
            return Ok(p);
        }
    }
    Err(Error::Config(format!("missing data file {}", dir.join(stem).display())))
}

/// Loads `(train pool, held-out pool)` for an IDX dataset directory.
fn load_idx_pair(dir: &std::path::Path) -> Result<(Dataset, Dataset)> {
    let train = load_idx(find(dir, "train-images-idx3-ubyte")?, find(dir, "train-labels-idx1-ubyte")?)?;
    let test = load_idx(find(dir, "t10k-images-idx3-ubyte")?, find(dir, "t10k-labels-idx1-ubyte")?)?;
    let classes = train.num_classes().max(test.num_classes());
    let widen = |d: Dataset| Dataset::new(d.features().to_vec(), d.labels().to_vec(), d.dim(), classes);
    Ok((widen(train)?, widen(test)?))
}

/// Builds shards, validation/test halves and the architecture for `cfg`.
///
/// Depends only on the data settings, the partition and perturbation specs
/// and the seed, so every strategy run with the same seed sees the same clients.
pub fn prepare_data(cfg: &SimConfig) -> Result<FederatedData> {
    cfg.validate()?;
    let seed = cfg.seed;
    let (train_pool, held_out) = match &cfg.data {
        DataSource::Synthetic(s) => {
            let pool = make_synthetic_with(
                &SyntheticSpec {
                    classes: s.classes,
                    dim: s.dim,
                    samples: s.train_samples + s.test_samples,
                    separation: s.separation,
                    offset: s.offset,
                },
                &mut stream_rng(seed, Stream::Data, &[]),
            )?;
            let train: Vec<usize> = (0..s.train_samples).collect();
            let test: Vec<usize> = (s.train_samples..pool.len()).collect();
            (pool.subset(&train), pool.subset(&test))
        }
        DataSource::Mnist { dir, train_samples } | DataSource::Fmnist { dir, train_samples } => {
            let (train, test) = load_idx_pair(&idx_dir(dir, cfg.data.name())?)?;
            let train = match train_samples {
                Some(n) if *n < train.len() => {
                    let mut order: Vec<usize> = (0..train.len()).collect();
                    rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut stream_rng(seed, Stream::Data, &[]));
                    train.subset(&order[..*n])
                }
                _ => train,
            };
            (train, test)
        }
    };

    let (validation, test) = split_validation_test(&held_out, &mut stream_rng(seed, Stream::Split, &[]));
    let n_train = train_pool.len();
    let mut prng = stream_rng(seed, Stream::Partition, &[]);
    let sizes = match cfg.partition.size_law {
        SizeLaw::PowerLaw => sample_power_law_sizes(cfg.num_clients, n_train, &mut prng)?,
        SizeLaw::Uniform => uniform_sizes(cfg.num_clients, n_train)?,
    };
    let shards = dirichlet_partition(&train_pool, &cfg.partition, &sizes, &mut prng)?;
    let shards = assign_perturbations(shards, &cfg.perturb, &mut stream_rng(seed, Stream::Perturbation, &[]))?;
    let train = Dataset::concat(shards.iter().map(|s| &s.dataset))?;

    let mut dims = vec![train_pool.dim()];
    dims.extend_from_slice(&cfg.hidden);
    dims.push(train_pool.num_classes());
    let arch = Architecture::new(dims, cfg.activation)?;
    Ok(FederatedData {
        shards,
        validation,
        test,
        train,
        arch,
    })
}
