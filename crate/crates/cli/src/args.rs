use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use fedshap::selection::Strategy;
use fedshap::shapley::SvMode;
use fedshap::sim::{DataSource, SimConfig, SyntheticSource};

use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "fedshap", version, about = "Federated client-selection simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one configuration and write its run directory.
    Run(Opts),
    /// Run several strategies over several seeds and print mean ± std accuracy.
    Compare(Opts),
    /// Run strategies across the values of one axis.
    Sweep(Opts),
    /// Draw test accuracy against round for one or more rounds.csv files.
    Plot(PlotArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DatasetArg {
    Synthetic,
    Mnist,
    Fmnist,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum StrategyArg {
    GreedyFed,
    Ucb,
    SFedavg,
    Fedavg,
    Fedprox,
    PowerOfChoice,
    Centralized,
}

impl StrategyArg {
    pub fn label(self) -> &'static str {
        match self {
            StrategyArg::GreedyFed => "greedy_fed",
            StrategyArg::Ucb => "ucb",
            StrategyArg::SFedavg => "s_fedavg",
            StrategyArg::Fedavg => "fedavg",
            StrategyArg::Fedprox => "fedprox",
            StrategyArg::PowerOfChoice => "power_of_choice",
            StrategyArg::Centralized => "centralized",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SvModeArg {
    Mean,
    Exp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "kebab-case")]
pub enum Axis {
    AlphaDir,
    Rounds,
    StragglerFrac,
    Sigma,
}

/// Simulation settings. Every flag can also be given as `key = value` in the
/// `--config` file (key is the flag name without dashes); flags win.
#[derive(Debug, Clone, Default, Args)]
pub struct Opts {
    /// INI-style key = value file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub dataset: Option<DatasetArg>,
    /// Directory holding the IDX files (default $FEDSHAP_DATA_DIR/<dataset>).
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    #[arg(long)]
    pub train_samples: Option<usize>,
    /// Strategy for `run` [default: greedy_fed].
    #[arg(long, value_enum)]
    pub strategy: Option<StrategyArg>,
    /// Strategies for `compare` and `sweep` [default: greedy_fed,fedavg].
    #[arg(long, value_enum, value_delimiter = ',')]
    pub strategies: Option<Vec<StrategyArg>>,
    /// Number of clients N [default: 30].
    #[arg(long = "n")]
    pub n: Option<usize>,
    /// Clients selected per round M [default: 3].
    #[arg(long = "m")]
    pub m: Option<usize>,
    /// Communication rounds T [default: 60].
    #[arg(long)]
    pub rounds: Option<usize>,
    /// Dirichlet concentration of the label skew [default: 1e-4].
    #[arg(long)]
    pub alpha_dir: Option<f64>,
    /// Fraction of clients that are stragglers [default: 0].
    #[arg(long)]
    pub straggler_frac: Option<f64>,
    /// Largest per-client update noise level [default: 0].
    #[arg(long)]
    pub noise_sigma: Option<f64>,
    /// Proximal coefficient [default: 0, or 0.1 for fedprox].
    #[arg(long)]
    pub mu: Option<f64>,
    /// Cumulative Shapley averaging [default: exp].
    #[arg(long, value_enum)]
    pub sv_mode: Option<SvModeArg>,
    /// Exponential averaging weight of the previous value [default: 0.5].
    #[arg(long)]
    pub exp_alpha: Option<f64>,
    /// Truncation threshold of the Shapley estimator [default: 1e-4].
    #[arg(long)]
    pub sv_epsilon: Option<f64>,
    /// Sampling-round cap of the Shapley estimator [default: 50 per selected client].
    #[arg(long)]
    pub sv_max_iters: Option<usize>,
    /// UCB exploration constant [default: 0.1].
    #[arg(long)]
    pub ucb_c: Option<f64>,
    /// S-FedAvg softmax temperature [default: 10].
    #[arg(long)]
    pub beta: Option<f64>,
    /// Power-Of-Choice initial candidate count [default: N].
    #[arg(long)]
    pub poc_d0: Option<usize>,
    /// Power-Of-Choice candidate decay [default: 0.9].
    #[arg(long)]
    pub poc_decay: Option<f64>,
    /// Seed for `run` [default: 1].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Seeds for `compare` and `sweep` [default: 1,2,3,4,5].
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Local epochs E [default: 5].
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Mini-batches per epoch B [default: 5].
    #[arg(long)]
    pub batches: Option<usize>,
    /// Learning rate [default: 0.01].
    #[arg(long)]
    pub lr: Option<f64>,
    /// SGD momentum [default: 0.5].
    #[arg(long)]
    pub momentum: Option<f64>,
    /// Hidden layer widths, comma separated [default: 32 synthetic, 64 IDX].
    #[arg(long, value_delimiter = ',')]
    pub hidden: Option<Vec<usize>>,
    /// Sweep axis.
    #[arg(long, value_enum)]
    pub axis: Option<Axis>,
    /// Sweep values, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub values: Option<Vec<f64>>,
    /// Output directory [default: runs].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Record wall-clock milliseconds per round (artifacts stop being byte-reproducible).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub wall_clock: Option<bool>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// rounds.csv files, one curve each.
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
    /// Curve names, comma separated [default: run directory names].
    #[arg(long, value_delimiter = ',')]
    pub labels: Option<Vec<String>>,
    #[arg(long, default_value = "accuracy.svg")]
    pub out: PathBuf,
    #[arg(long, default_value = "Test accuracy")]
    pub title: String,
}

#[derive(Parser)]
#[command(name = "config")]
struct FileOpts {
    #[command(flatten)]
    opts: Opts,
}

macro_rules! fill {
    ($dst:expr, $src:expr; $($f:ident),* $(,)?) => {
        $( if $dst.$f.is_none() { $dst.$f = $src.$f.take(); } )*
    };
}

/// Turns `key = value` lines into `--key=value` arguments, one per line.
fn file_arguments(path: &Path, text: &str) -> Result<Vec<(usize, String)>, CliError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') || line.starts_with('[') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Usage(format!(
                "{}:{}: expected key = value, got '{line}'",
                path.display(),
                i + 1
            )));
        };
        let key = key.trim().replace('_', "-");
        let value = value.trim().trim_matches('"');
        if key == "config" {
            return Err(CliError::Usage(format!("{}:{}: config files cannot nest", path.display(), i + 1)));
        }
        out.push((i + 1, format!("--{key}={value}")));
    }
    Ok(out)
}

impl Opts {
    /// Fills unset fields from the `--config` file, if any.
    pub fn resolve(mut self) -> Result<Opts, CliError> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let args = file_arguments(&path, &text)?;
        for (line, arg) in &args {
            FileOpts::try_parse_from(["config", arg.as_str()]).map_err(|e| {
                let msg = e.to_string();
                let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
                CliError::Usage(format!("{}:{line}: {first} ({arg})", path.display()))
            })?;
        }
        let mut file = FileOpts::try_parse_from(std::iter::once("config".to_string()).chain(args.into_iter().map(|a| a.1)))
            .map_err(|e| CliError::Usage(format!("{}: {}", path.display(), e.to_string().trim())))?
            .opts;
        fill!(self, file;
            dataset, data_dir, train_samples, strategy, strategies, n, m, rounds, alpha_dir,
            straggler_frac, noise_sigma, mu, sv_mode, exp_alpha, sv_epsilon, sv_max_iters, ucb_c,
            beta, poc_d0, poc_decay, seed, seeds, epochs, batches, lr, momentum, hidden, axis,
            values, out, wall_clock,
        );
        Ok(self)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("runs"))
    }

    pub fn seeds(&self) -> Vec<u64> {
        self.seeds.clone().unwrap_or_else(|| vec![1, 2, 3, 4, 5])
    }

    pub fn strategies(&self) -> Vec<StrategyArg> {
        self.strategies
            .clone()
            .unwrap_or_else(|| vec![StrategyArg::GreedyFed, StrategyArg::Fedavg])
    }

    fn data_source(&self) -> DataSource {
        match self.dataset.unwrap_or(DatasetArg::Synthetic) {
            DatasetArg::Synthetic => {
                let mut s = SyntheticSource::default();
                if let Some(n) = self.train_samples {
                    s.train_samples = n;
                }
                DataSource::Synthetic(s)
            }
            DatasetArg::Mnist => DataSource::Mnist {
                dir: self.data_dir.clone(),
                train_samples: self.train_samples,
            },
            DatasetArg::Fmnist => DataSource::Fmnist {
                dir: self.data_dir.clone(),
                train_samples: self.train_samples,
            },
        }
    }

    /// The effective simulator configuration for one strategy and seed.
    pub fn sim_config(&self, strategy: StrategyArg, seed: u64) -> Result<SimConfig, CliError> {
        let kind = match strategy {
            StrategyArg::GreedyFed => Strategy::GreedyFed,
            StrategyArg::Ucb => Strategy::Ucb {
                c_explore: self.ucb_c.unwrap_or(0.1),
            },
            StrategyArg::SFedavg => Strategy::SFedAvg {
                beta: self.beta.unwrap_or(10.0),
            },
            StrategyArg::Fedavg | StrategyArg::Fedprox => Strategy::FedAvg,
            StrategyArg::PowerOfChoice => Strategy::PowerOfChoice {
                d0: self.poc_d0,
                decay: self.poc_decay.unwrap_or(0.9),
            },
            StrategyArg::Centralized => Strategy::Centralized,
        };
        let mut c = SimConfig::new(self.data_source(), kind).with_seed(seed);
        let (n, m) = (self.n.unwrap_or(c.num_clients), self.m.unwrap_or(c.budget));
        c = c.with_clients(n, m);
        if let Some(t) = self.rounds {
            c.rounds = t;
        }
        if let Some(a) = self.alpha_dir {
            c.partition.dirichlet_alpha = a;
        }
        if let Some(x) = self.straggler_frac {
            c.perturb.straggler_fraction = x;
        }
        if let Some(s) = self.noise_sigma {
            c.perturb.noise_scale = s;
        }
        c.train.prox_mu = match (strategy, self.mu) {
            (_, Some(mu)) => mu,
            (StrategyArg::Fedprox, None) => 0.1,
            _ => 0.0,
        };
        if let Some(e) = self.epochs {
            c.train.epochs = e;
        }
        if let Some(b) = self.batches {
            c.train.batches_per_epoch = b;
        }
        if let Some(lr) = self.lr {
            c.train.learning_rate = lr;
        }
        if let Some(g) = self.momentum {
            c.train.momentum = g;
        }
        let alpha = self.exp_alpha.unwrap_or(0.5);
        c.sv_mode = match self.sv_mode {
            Some(SvModeArg::Mean) => SvMode::Mean,
            Some(SvModeArg::Exp) | None => SvMode::Exponential { alpha },
        };
        if let Some(e) = self.sv_epsilon {
            c.gtg.epsilon = e;
        }
        if self.sv_max_iters.is_some() {
            c.gtg.max_iters = self.sv_max_iters;
        }
        if let Some(h) = &self.hidden {
            c.hidden = h.clone();
        }
        c.wall_clock = self.wall_clock.unwrap_or(false);
        c.label = Some(strategy.label().to_string());
        c.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(c)
    }
}
