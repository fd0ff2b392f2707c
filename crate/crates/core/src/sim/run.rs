use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;

use crate::data::{apply_update_noise, straggler_epochs};
use crate::error::{Error, Result};
use crate::nn::{client_update, model_average, AveragingEntry, ParamVector};
use crate::rng::{stream_rng, Stream};
use crate::selection::{select, SelectionContext, Strategy};
use crate::shapley::{exact_shapley, gtg_shapley, CumulativeSv, SvReport, ValidationUtility};

use super::{prepare_data, FederatedData, SimConfig, SvBackend};

/// Metrics for one communication round.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct RoundRecord {
    pub t: usize,
    pub selected: Vec<usize>,
    /// Validation loss of the server model entering the round.
    pub val_loss_before: f64,
    /// Validation loss of the aggregated model leaving the round.
    pub val_loss_after: f64,
    pub test_loss: f64,
    pub test_accuracy: f64,
    /// Round Shapley values of the selected clients; empty when not computed.
    pub sv: BTreeMap<usize, f64>,
    pub sv_truncated: bool,
    pub utility_evals: usize,
    pub elapsed_ms: u64,
    /// Loss on pooled training data (centralized runs only).
    pub train_loss: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub records: Vec<RoundRecord>,
    pub final_params: ParamVector,
    pub config: SimConfig,
    pub seed: u64,
    /// `N_k` after the last round.
    pub selection_counts: Vec<usize>,
}

impl RunResult {
    pub fn final_accuracy(&self) -> f64 {
        final_accuracy(&self.records)
    }
}

pub fn final_accuracy(records: &[RoundRecord]) -> f64 {
    records.last().map_or(f64::NAN, |r| r.test_accuracy)
}

/// A failed run: the round it failed in and every completed round before it.
#[derive(Debug, thiserror::Error)]
#[error("round {round}: {source}")]
pub struct SimError {
    pub round: usize,
    pub records: Vec<RoundRecord>,
    #[source]
    pub source: Error,
}

fn setup_error(source: Error) -> SimError {
    SimError {
        round: 0,
        records: Vec::new(),
        source,
    }
}

/// Runs the federated round loop for exactly `cfg.rounds` rounds.
pub fn run(cfg: &SimConfig) -> Result<RunResult, SimError> {
    let data = prepare_data(cfg).map_err(setup_error)?;
    run_with_data(cfg, &data)
}

/// Dispatches to [`run_centralized`] for the centralized strategy, else [`run`].
pub fn run_any(cfg: &SimConfig) -> Result<RunResult, SimError> {
    match cfg.strategy.kind {
        Strategy::Centralized => run_centralized(cfg),
        _ => run(cfg),
    }
}

struct ClientOutput {
    client: usize,
    params: ParamVector,
}

fn train_client(cfg: &SimConfig, data: &FederatedData, server: &ParamVector, t: usize, k: usize) -> Result<ClientOutput> {
    let shard = &data.shards[k];
    let path = [t as u64, k as u64];
    let epochs = shard
        .is_straggler
        .then(|| straggler_epochs(cfg.train.epochs, &mut stream_rng(cfg.seed, Stream::Straggler, &path)));
    let trained = client_update(
        &data.arch,
        server,
        &shard.dataset,
        &cfg.train,
        epochs,
        &mut stream_rng(cfg.seed, Stream::Training, &path),
    )
    .map_err(|e| Error::Training(format!("client {k}: {e}")))?;
    let params = apply_update_noise(&trained, shard.sigma, &mut stream_rng(cfg.seed, Stream::Noise, &path))?;
    Ok(ClientOutput { client: k, params })
}

fn exact_report(utility: &ValidationUtility<'_>, players: &[usize]) -> Result<SvReport> {
    use crate::shapley::CoalitionUtility;
    let sv = exact_shapley(utility, players)?;
    let mut sorted = players.to_vec();
    sorted.sort_unstable();
    Ok(SvReport {
        round_sv: sv,
        truncated_between_rounds: false,
        permutations_used: 0,
        utility_evals: 1 << players.len(),
        sampling_rounds: 0,
        converged: true,
        empty_utility: utility.eval(&[])?,
        grand_utility: utility.eval(&sorted)?,
    })
}

struct RoundState<'a> {
    cfg: &'a SimConfig,
    data: &'a FederatedData,
    sizes: Vec<usize>,
    rr_order: Vec<usize>,
    server: ParamVector,
    cumulative: CumulativeSv,
}

impl RoundState<'_> {
    fn step(&mut self, t: usize) -> Result<RoundRecord> {
        let (cfg, data) = (self.cfg, self.data);
        let start = Instant::now();
        let server = &self.server;
        let loss_query = |k: usize| -> Result<f64> { Ok(data.arch.evaluate(server, &data.shards[k].dataset)?.loss) };
        let ctx = SelectionContext {
            round: t,
            num_clients: cfg.num_clients,
            budget: cfg.budget,
            cumulative: &self.cumulative,
            sizes: &self.sizes,
            rr_order: &self.rr_order,
            local_loss: Some(&loss_query),
        };
        let selected = select(&ctx, &cfg.strategy, &mut stream_rng(cfg.seed, Stream::Selection, &[t as u64]))?;

        let outputs: Vec<ClientOutput> = if cfg.parallel {
            selected
                .par_iter()
                .map(|&k| train_client(cfg, data, server, t, k))
                .collect::<Result<_>>()?
        } else {
            selected
                .iter()
                .map(|&k| train_client(cfg, data, server, t, k))
                .collect::<Result<_>>()?
        };
        for &k in &selected {
            self.cumulative.record_selection(k)?;
        }

        let entries: Vec<AveragingEntry<'_>> = outputs
            .iter()
            .map(|o| AveragingEntry {
                client: o.client,
                samples: self.sizes[o.client],
                params: &o.params,
            })
            .collect();
        let next = model_average(&entries)?;
        if !next.is_finite() {
            return Err(Error::Training("aggregated model is not finite".into()));
        }

        let val_before = data.arch.evaluate(server, &data.validation)?.loss;
        let mut record = RoundRecord {
            t,
            selected: selected.clone(),
            val_loss_before: val_before,
            val_loss_after: f64::NAN,
            test_loss: f64::NAN,
            test_accuracy: f64::NAN,
            sv: BTreeMap::new(),
            sv_truncated: false,
            utility_evals: 0,
            elapsed_ms: 0,
            train_loss: None,
        };
        if cfg.strategy.kind.uses_shapley() {
            let utility = ValidationUtility::new(&data.arch, server, entries, &data.validation);
            let report = match cfg.sv_backend {
                SvBackend::Gtg => gtg_shapley(
                    &utility,
                    &selected,
                    &cfg.gtg,
                    &mut stream_rng(cfg.seed, Stream::Shapley, &[t as u64]),
                )?,
                SvBackend::Exact => exact_report(&utility, &selected)?,
            };
            self.cumulative.update(&report)?;
            record.sv = report.round_sv;
            record.sv_truncated = report.truncated_between_rounds;
            record.utility_evals = report.utility_evals;
        }

        record.val_loss_after = data.arch.evaluate(&next, &data.validation)?.loss;
        let test = data.arch.evaluate(&next, &data.test)?;
        record.test_loss = test.loss;
        record.test_accuracy = test.accuracy;
        if cfg.wall_clock {
            record.elapsed_ms = start.elapsed().as_millis() as u64;
        }
        self.server = next;
        Ok(record)
    }
}

/// [`run`] over already prepared data (which must come from the same data
/// settings and seed for the result to be reproducible from `cfg` alone).
pub fn run_with_data(cfg: &SimConfig, data: &FederatedData) -> Result<RunResult, SimError> {
    cfg.validate().map_err(setup_error)?;
    if cfg.strategy.kind == Strategy::Centralized {
        return Err(setup_error(Error::Config(
            "use run_centralized for the centralized baseline".into(),
        )));
    }
    if data.shards.len() != cfg.num_clients {
        return Err(setup_error(Error::Config(format!(
            "prepared data has {} shards for {} clients",
            data.shards.len(),
            cfg.num_clients
        ))));
    }
    let mut rr_order: Vec<usize> = (0..cfg.num_clients).collect();
    rand::seq::SliceRandom::shuffle(rr_order.as_mut_slice(), &mut stream_rng(cfg.seed, Stream::RoundRobin, &[]));
    let mut state = RoundState {
        cfg,
        data,
        sizes: data.sizes(),
        rr_order,
        server: data.arch.init(&mut stream_rng(cfg.seed, Stream::Init, &[])),
        cumulative: CumulativeSv::new(cfg.num_clients, cfg.sv_mode),
    };

    let mut records = Vec::with_capacity(cfg.rounds);
    for t in 0..cfg.rounds {
        match state.step(t) {
            Ok(r) => records.push(r),
            Err(source) => {
                return Err(SimError {
                    round: t,
                    records,
                    source,
                })
            }
        }
    }
    Ok(RunResult {
        records,
        final_params: state.server,
        config: cfg.clone(),
        seed: cfg.seed,
        selection_counts: state.cumulative.counts().to_vec(),
    })
}

/// Trains one model on the pooled client data for `cfg.rounds` rounds of
/// `cfg.train.epochs` epochs each. Stragglers, noise and the proximal term
/// do not apply.
pub fn run_centralized(cfg: &SimConfig) -> Result<RunResult, SimError> {
    cfg.validate().map_err(setup_error)?;
    let data = prepare_data(cfg).map_err(setup_error)?;
    let train_cfg = crate::nn::TrainConfig {
        prox_mu: 0.0,
        ..cfg.train
    };
    let mut server = data.arch.init(&mut stream_rng(cfg.seed, Stream::Init, &[]));
    let mut records = Vec::with_capacity(cfg.rounds);
    for t in 0..cfg.rounds {
        let step = || -> Result<(RoundRecord, ParamVector)> {
            let start = Instant::now();
            let val_before = data.arch.evaluate(&server, &data.validation)?.loss;
            let next = client_update(
                &data.arch,
                &server,
                &data.train,
                &train_cfg,
                None,
                &mut stream_rng(cfg.seed, Stream::Training, &[t as u64, u64::MAX]),
            )?;
            let test = data.arch.evaluate(&next, &data.test)?;
            let record = RoundRecord {
                t,
                selected: Vec::new(),
                val_loss_before: val_before,
                val_loss_after: data.arch.evaluate(&next, &data.validation)?.loss,
                test_loss: test.loss,
                test_accuracy: test.accuracy,
                sv: BTreeMap::new(),
                sv_truncated: false,
                utility_evals: 0,
                elapsed_ms: if cfg.wall_clock { start.elapsed().as_millis() as u64 } else { 0 },
                train_loss: Some(data.arch.evaluate(&next, &data.train)?.loss),
            };
            Ok((record, next))
        };
        match step() {
            Ok((r, next)) => {
                records.push(r);
                server = next;
            }
            Err(source) => {
                return Err(SimError {
                    round: t,
                    records,
                    source,
                })
            }
        }
    }
    Ok(RunResult {
        records,
        final_params: server,
        config: cfg.clone(),
        seed: cfg.seed,
        selection_counts: vec![0; cfg.num_clients],
    })
}
