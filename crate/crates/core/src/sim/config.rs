use std::path::PathBuf;

use crate::data::{PartitionSpec, PerturbationSpec, SizeLaw, LabelSampler};
use crate::error::{Error, Result};
use crate::nn::{Activation, TrainConfig};
use crate::selection::{Strategy, StrategyConfig};
use crate::shapley::{GtgConfig, SvMode};

/// Gaussian-blob corpus parameters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SyntheticSource {
    pub classes: usize,
    pub dim: usize,
    pub train_samples: usize,
    /// Held-out pool, split evenly into validation and test.
    pub test_samples: usize,
    pub separation: f64,
    /// Norm of a feature offset shared by all classes.
    #[serde(default)]
    pub offset: f64,
}

impl Default for SyntheticSource {
    fn default() -> Self {
        SyntheticSource {
            classes: 10,
            dim: 20,
            train_samples: 3000,
            test_samples: 2000,
            separation: 5.0,
            offset: 20.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DataSource {
    Synthetic(SyntheticSource),
    /// IDX files under `dir` (or `$FEDSHAP_DATA_DIR/mnist`).
    Mnist {
        dir: Option<PathBuf>,
        train_samples: Option<usize>,
    },
    Fmnist {
        dir: Option<PathBuf>,
        train_samples: Option<usize>,
    },
}

impl DataSource {
    pub fn name(&self) -> &'static str {
        match self {
            DataSource::Synthetic(_) => "synthetic",
            DataSource::Mnist { .. } => "mnist",
            DataSource::Fmnist { .. } => "fmnist",
        }
    }

    pub fn default_hidden(&self) -> Vec<usize> {
        match self {
            DataSource::Synthetic(_) => vec![32],
            _ => vec![64],
        }
    }
}

/// Where per-round Shapley values come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SvBackend {
    #[default]
    Gtg,
    /// Full coalition enumeration; a verification hook limited to 8 selected clients.
    Exact,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SimConfig {
    pub num_clients: usize,
    pub budget: usize,
    pub rounds: usize,
    pub strategy: StrategyConfig,
    pub train: TrainConfig,
    pub partition: PartitionSpec,
    pub perturb: PerturbationSpec,
    pub gtg: GtgConfig,
    pub sv_mode: SvMode,
    pub seed: u64,
    pub data: DataSource,
    /// Hidden layer widths; the input and output widths come from the data.
    pub hidden: Vec<usize>,
    pub activation: Activation,
    #[serde(default)]
    pub sv_backend: SvBackend,
    /// Train selected clients on the rayon pool. Results do not depend on it.
    #[serde(default = "default_true")]
    pub parallel: bool,
    /// Record wall-clock milliseconds per round. Off keeps artifacts byte-reproducible.
    #[serde(default)]
    pub wall_clock: bool,
    /// Row label for comparison tables; defaults to the strategy name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

fn default_true() -> bool {
    true
}

impl SimConfig {
    /// Defaults for the given data source: N = 30, M = 3, T = 60, E = 5,
    /// B = 5, lr 0.01, momentum 0.5, Dirichlet 1e-4 with power-law sizes,
    /// exponential SV averaging with alpha 0.5.
    pub fn new(data: DataSource, strategy: Strategy) -> Self {
        let hidden = data.default_hidden();
        SimConfig {
            num_clients: 30,
            budget: 3,
            rounds: 60,
            strategy: StrategyConfig::new(strategy),
            train: TrainConfig::default(),
            partition: PartitionSpec {
                dirichlet_alpha: 1e-4,
                num_clients: 30,
                size_law: SizeLaw::PowerLaw,
                sampler: LabelSampler::Multinomial,
            },
            perturb: PerturbationSpec::default(),
            gtg: GtgConfig::default(),
            sv_mode: SvMode::Exponential { alpha: 0.5 },
            seed: 0,
            data,
            hidden,
            activation: Activation::Relu,
            sv_backend: SvBackend::Gtg,
            parallel: true,
            wall_clock: false,
            label: None,
        }
    }

    pub fn synthetic(strategy: Strategy) -> Self {
        SimConfig::new(DataSource::Synthetic(SyntheticSource::default()), strategy)
    }

    pub fn with_clients(mut self, n: usize, m: usize) -> Self {
        self.num_clients = n;
        self.partition.num_clients = n;
        self.budget = m;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_rounds(mut self, rounds: usize) -> Self {
        self.rounds = rounds;
        self
    }

    /// Label used in tables: explicit label, else strategy name with FedAvg
    /// plus a proximal term reported as `fedprox`.
    pub fn display_label(&self) -> String {
        if let Some(l) = &self.label {
            return l.clone();
        }
        match self.strategy.kind {
            Strategy::FedAvg if self.train.prox_mu > 0.0 => "fedprox".into(),
            k => k.name().into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_clients == 0 {
            return Err(Error::Config("need at least one client".into()));
        }
        if self.budget == 0 || self.budget > self.num_clients {
            return Err(Error::Config(format!(
                "selection budget M = {} must lie in [1, N = {}]",
                self.budget, self.num_clients
            )));
        }
        if self.rounds == 0 {
            return Err(Error::Input("the round budget T must be at least 1".into()));
        }
        if self.partition.num_clients != self.num_clients {
            return Err(Error::Config(format!(
                "partition is for {} clients, simulation for {}",
                self.partition.num_clients, self.num_clients
            )));
        }
        if self.sv_backend == SvBackend::Exact && self.budget > crate::shapley::EXHAUSTIVE_PLAYER_LIMIT {
            return Err(Error::Config(format!(
                "the exact Shapley hook supports at most {} selected clients",
                crate::shapley::EXHAUSTIVE_PLAYER_LIMIT
            )));
        }
        self.train.validate()?;
        self.partition.validate()?;
        self.perturb.validate()?;
        self.gtg.validate()?;
        self.sv_mode.validate()?;
        self.strategy.validate(self.num_clients, self.budget)?;
        Ok(())
    }
}
