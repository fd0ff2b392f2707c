//! Client-selection strategies.
//!
//! All strategies share [`select`]. The Shapley-driven ones (GreedyFed, UCB)
//! open with a round-robin phase of `ceil(N / M)` rounds over a fixed random
//! order so every client is valued once before any comparison is made.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::shapley::CumulativeSv;

/// Selection rule. FedProx is FedAvg selection with a proximal training term
/// and so has no variant of its own.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Strategy {
    /// Round-robin, then the `M` largest cumulative values.
    GreedyFed,
    /// Round-robin, then the `M` largest `SV_k + c * sqrt(2 ln(sum_j N_j) / N_k)`.
    Ucb { c_explore: f64 },
    /// Sample without replacement from `softmax(beta * values)`.
    SFedAvg { beta: f64 },
    /// Uniform random `M`-subset.
    FedAvg,
    /// Query `max(M, round(d0 * decay^t))` size-weighted candidates and keep
    /// the `M` with the highest local loss. `d0 = None` means all clients.
    PowerOfChoice { d0: Option<usize>, decay: f64 },
    /// No selection; the simulator trains on pooled data instead.
    Centralized,
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::GreedyFed => "greedy_fed",
            Strategy::Ucb { .. } => "ucb",
            Strategy::SFedAvg { .. } => "s_fedavg",
            Strategy::FedAvg => "fedavg",
            Strategy::PowerOfChoice { .. } => "power_of_choice",
            Strategy::Centralized => "centralized",
        }
    }

    /// Whether the strategy consumes cumulative Shapley values.
    pub fn uses_shapley(&self) -> bool {
        matches!(self, Strategy::GreedyFed | Strategy::Ucb { .. } | Strategy::SFedAvg { .. })
    }

    pub fn uses_round_robin(&self) -> bool {
        matches!(self, Strategy::GreedyFed | Strategy::Ucb { .. })
    }
}

/// Ordering among clients with equal scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    #[default]
    LowerIndex,
    HigherIndex,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StrategyConfig {
    pub kind: Strategy,
    #[serde(default)]
    pub tie_break: TieBreak,
}

impl StrategyConfig {
    pub fn new(kind: Strategy) -> Self {
        StrategyConfig {
            kind,
            tie_break: TieBreak::LowerIndex,
        }
    }

    pub fn validate(&self, num_clients: usize, budget: usize) -> Result<()> {
        match self.kind {
            Strategy::Ucb { c_explore } if !(c_explore > 0.0) => {
                Err(Error::Config(format!("UCB exploration constant must be positive, got {c_explore}")))
            }
            Strategy::SFedAvg { beta } if !(beta > 0.0) => {
                Err(Error::Config(format!("S-FedAvg temperature must be positive, got {beta}")))
            }
            Strategy::PowerOfChoice { decay, .. } if !(decay > 0.0 && decay <= 1.0) => {
                Err(Error::Config(format!("Power-Of-Choice decay {decay} outside (0, 1]")))
            }
            Strategy::PowerOfChoice { d0: Some(d0), .. } if d0 < budget || d0 > num_clients => Err(Error::Config(
                format!("Power-Of-Choice d0 = {d0} must lie in [M, N] = [{budget}, {num_clients}]"),
            )),
            _ => Ok(()),
        }
    }
}

/// Local loss of the current server model on a client's shard.
pub type LocalLossQuery<'a> = &'a (dyn Fn(usize) -> Result<f64> + Sync);

/// Everything a strategy may look at when picking round `round`'s clients.
pub struct SelectionContext<'a> {
    pub round: usize,
    pub num_clients: usize,
    pub budget: usize,
    pub cumulative: &'a CumulativeSv,
    pub sizes: &'a [usize],
    pub rr_order: &'a [usize],
    pub local_loss: Option<LocalLossQuery<'a>>,
}

impl SelectionContext<'_> {
    fn validate(&self) -> Result<()> {
        if self.budget == 0 || self.budget > self.num_clients {
            return Err(Error::Config(format!(
                "selection budget M = {} must lie in [1, N = {}]",
                self.budget, self.num_clients
            )));
        }
        if self.sizes.len() != self.num_clients || self.cumulative.num_clients() != self.num_clients {
            return Err(Error::Config("per-client state does not cover all clients".into()));
        }
        Ok(())
    }
}

/// Number of round-robin rounds needed to visit every client once: `ceil(N / M)`.
pub fn rr_phase_length(num_clients: usize, budget: usize) -> usize {
    num_clients.div_ceil(budget)
}

/// Clients in the `round`-th block of `M` consecutive entries of `rr_order`,
/// wrapping to the front for the final partial block.
pub fn round_robin_block(rr_order: &[usize], round: usize, budget: usize) -> Vec<usize> {
    let n = rr_order.len();
    (0..budget).map(|i| rr_order[(round * budget + i) % n]).collect()
}

/// Indices of the `m` largest scores; ties resolved by `tie_break`.
pub fn top_m(scores: &[(usize, f64)], m: usize, tie_break: TieBreak) -> Vec<usize> {
    let mut ranked = scores.to_vec();
    ranked.sort_by(|a, b| {
        b.1.total_cmp(&a.1).then_with(|| match tie_break {
            TieBreak::LowerIndex => a.0.cmp(&b.0),
            TieBreak::HigherIndex => b.0.cmp(&a.0),
        })
    });
    ranked.into_iter().take(m).map(|(k, _)| k).collect()
}

/// Draws `m` distinct items, each draw proportional to the remaining weights.
pub fn sample_weighted_without_replacement<R: Rng + ?Sized>(
    weights: &[f64],
    m: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if m > weights.len() {
        return Err(Error::Input(format!("cannot draw {m} of {} items", weights.len())));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::Input("sampling weights must be finite and non-negative".into()));
    }
    let mut remaining: Vec<(usize, f64)> = weights.iter().copied().enumerate().collect();
    let mut out = Vec::with_capacity(m);
    for _ in 0..m {
        let total: f64 = remaining.iter().map(|(_, w)| w).sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = remaining.len() - 1;
            for (i, (_, w)) in remaining.iter().enumerate() {
                acc += w;
                if target < acc {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.random_range(0..remaining.len())
        };
        out.push(remaining.remove(pick).0);
    }
    Ok(out)
}

fn require_initialized(ctx: &SelectionContext<'_>) -> Result<()> {
    if let Some(k) = ctx.cumulative.values().iter().position(Option::is_none) {
        return Err(Error::Logic(format!(
            "client {k} has no Shapley value after the round-robin phase"
        )));
    }
    Ok(())
}

/// S-FedAvg value vector: cumulative values, with unvalued clients set to the
/// mean of the valued ones (zero when nobody has been valued yet).
pub fn s_fedavg_values(cumulative: &CumulativeSv) -> Vec<f64> {
    let known: Vec<f64> = cumulative.values().iter().flatten().copied().collect();
    let fill = if known.is_empty() {
        0.0
    } else {
        known.iter().sum::<f64>() / known.len() as f64
    };
    cumulative.values().iter().map(|v| v.unwrap_or(fill)).collect()
}

pub fn softmax(values: &[f64], beta: f64) -> Vec<f64> {
    let max = values.iter().map(|v| beta * v).fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = values.iter().map(|v| (beta * v - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

/// Picks this round's `M` clients.
pub fn select<R: Rng + ?Sized>(ctx: &SelectionContext<'_>, cfg: &StrategyConfig, rng: &mut R) -> Result<Vec<usize>> {
    ctx.validate()?;
    cfg.validate(ctx.num_clients, ctx.budget)?;
    let n = ctx.num_clients;
    let m = ctx.budget;

    if cfg.kind.uses_round_robin() && ctx.round < rr_phase_length(n, m) {
        let mut seen = vec![false; n];
        if ctx.rr_order.len() != n || ctx.rr_order.iter().any(|&k| k >= n || std::mem::replace(&mut seen[k], true)) {
            return Err(Error::Config("round-robin order must be a permutation of all clients".into()));
        }
        return Ok(round_robin_block(ctx.rr_order, ctx.round, m));
    }

    match cfg.kind {
        Strategy::GreedyFed => {
            require_initialized(ctx)?;
            let scores: Vec<(usize, f64)> = (0..n).map(|k| (k, ctx.cumulative.value(k).unwrap())).collect();
            Ok(top_m(&scores, m, cfg.tie_break))
        }
        Strategy::Ucb { c_explore } => {
            require_initialized(ctx)?;
            let total = ctx.cumulative.total_selections().max(1) as f64;
            let scores: Vec<(usize, f64)> = (0..n)
                .map(|k| {
                    let nk = ctx.cumulative.count(k).max(1) as f64;
                    let bonus = c_explore * (2.0 * total.ln() / nk).sqrt();
                    (k, ctx.cumulative.value(k).unwrap() + bonus)
                })
                .collect();
            Ok(top_m(&scores, m, cfg.tie_break))
        }
        Strategy::SFedAvg { beta } => {
            let probs = softmax(&s_fedavg_values(ctx.cumulative), beta);
            sample_weighted_without_replacement(&probs, m, rng)
        }
        Strategy::FedAvg => Ok(rand::seq::index::sample(rng, n, m).into_vec()),
        Strategy::PowerOfChoice { d0, decay } => {
            let query = ctx
                .local_loss
                .ok_or_else(|| Error::Config("Power-Of-Choice needs a local loss query".into()))?;
            let d0 = d0.unwrap_or(n) as f64;
            let d = ((d0 * decay.powi(ctx.round as i32)).round() as usize).clamp(m, n);
            let weights: Vec<f64> = ctx.sizes.iter().map(|&s| s as f64).collect();
            let candidates = sample_weighted_without_replacement(&weights, d, rng)?;
            let scores = candidates
                .par_iter()
                .map(|&k| query(k).map(|l| (k, l)))
                .collect::<Result<Vec<_>>>()?;
            Ok(top_m(&scores, m, cfg.tie_break))
        }
        Strategy::Centralized => Err(Error::Config(
            "centralized training has no client selection".into(),
        )),
    }
}
