use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use super::utility::{eval_with_context, CoalitionUtility};
use crate::error::{Error, Result};

pub const EXHAUSTIVE_PLAYER_LIMIT: usize = 8;

/// How permutations are drawn for each pivot client.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampling {
    /// Uniformly shuffle the non-pivot clients each sampling round.
    Random,
    /// Visit every ordering of the non-pivot clients once (one sweep, no
    /// convergence test). Limited to [`EXHAUSTIVE_PLAYER_LIMIT`] players.
    Exhaustive,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GtgConfig {
    /// Truncation threshold on utility gaps.
    pub epsilon: f64,
    /// Cap on sampling rounds; `None` means 50 per player.
    pub max_iters: Option<usize>,
    /// Number of trailing sampling rounds inspected by the convergence test.
    pub convergence_window: usize,
    /// Largest per-round change of any running mean still counted as
    /// converged; `None` reuses `epsilon`.
    pub convergence_tol: Option<f64>,
    pub sampling: Sampling,
}

impl Default for GtgConfig {
    fn default() -> Self {
        GtgConfig {
            epsilon: 1e-4,
            max_iters: None,
            convergence_window: 5,
            convergence_tol: None,
            sampling: Sampling::Random,
        }
    }
}

impl GtgConfig {
    pub fn max_iters_for(&self, players: usize) -> usize {
        self.max_iters.unwrap_or(50 * players)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.max_iters == Some(0) {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if self.convergence_window == 0 {
            return Err(Error::Config("convergence window must be at least 1".into()));
        }
        Ok(())
    }
}

/// Per-round Shapley estimates plus diagnostics.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SvReport {
    pub round_sv: BTreeMap<usize, f64>,
    pub truncated_between_rounds: bool,
    pub permutations_used: usize,
    pub utility_evals: usize,
    /// Sampling rounds completed.
    pub sampling_rounds: usize,
    pub converged: bool,
    /// `U(empty)`, the server model's utility.
    pub empty_utility: f64,
    /// `U(S_t)`, the aggregated model's utility.
    pub grand_utility: f64,
}

impl SvReport {
    pub fn total(&self) -> f64 {
        self.round_sv.values().sum()
    }
}

struct Scanner<'u, U: ?Sized> {
    utility: &'u U,
    epsilon: f64,
    v_empty: f64,
    v_grand: f64,
    evals: usize,
    sums: Vec<f64>,
    counts: Vec<usize>,
    prefix: Vec<usize>,
}

impl<U: CoalitionUtility + ?Sized> Scanner<'_, U> {
    /// Walks one permutation (given as positions into the player list),
    /// crediting each player with `v_{j+1} - v_j`. Once the remaining gap to
    /// the grand coalition drops below epsilon the value is frozen.
    fn scan(&mut self, players: &[usize], perm: &[usize]) -> Result<()> {
        let m = perm.len();
        let mut v_prev = self.v_empty;
        self.prefix.clear();
        for (j, &pos) in perm.iter().enumerate() {
            self.prefix.push(players[pos]);
            let v_next = if (self.v_grand - v_prev).abs() < self.epsilon {
                v_prev
            } else if j + 1 == m {
                self.v_grand
            } else {
                let mut subset = self.prefix.clone();
                subset.sort_unstable();
                self.evals += 1;
                eval_with_context(self.utility, &subset)?
            };
            self.sums[pos] += v_next - v_prev;
            self.counts[pos] += 1;
            v_prev = v_next;
        }
        Ok(())
    }

    fn means(&self) -> Vec<f64> {
        self.sums
            .iter()
            .zip(&self.counts)
            .map(|(s, &c)| if c == 0 { 0.0 } else { s / c as f64 })
            .collect()
    }
}

/// Truncated Monte Carlo Shapley estimation over the round's players.
///
/// If the grand coalition barely moves the utility (`|U(S_t) - U(empty)| < epsilon`)
/// every value is zero. Otherwise each sampling round visits every player
/// as pivot, shuffles the rest behind it and scans prefixes; estimates are
/// the running mean of all marginals a player has received.
pub fn gtg_shapley<U, R>(u: &U, players: &[usize], cfg: &GtgConfig, rng: &mut R) -> Result<SvReport>
where
    U: CoalitionUtility + ?Sized,
    R: Rng + ?Sized,
{
    cfg.validate()?;
    if players.is_empty() {
        return Err(Error::Input("gtg_shapley needs at least one player".into()));
    }
    let mut sorted = players.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Input(format!("duplicate players in {players:?}")));
    }
    let m = players.len();
    if cfg.sampling == Sampling::Exhaustive && m > EXHAUSTIVE_PLAYER_LIMIT {
        return Err(Error::Capacity {
            players: m,
            limit: EXHAUSTIVE_PLAYER_LIMIT,
        });
    }

    let v_empty = eval_with_context(u, &[])?;
    let v_grand = eval_with_context(u, &sorted)?;
    let mut report = SvReport {
        round_sv: players.iter().map(|&k| (k, 0.0)).collect(),
        truncated_between_rounds: false,
        permutations_used: 0,
        utility_evals: 2,
        sampling_rounds: 0,
        converged: false,
        empty_utility: v_empty,
        grand_utility: v_grand,
    };
    if (v_grand - v_empty).abs() < cfg.epsilon {
        report.truncated_between_rounds = true;
        return Ok(report);
    }

    let mut scanner = Scanner {
        utility: u,
        epsilon: cfg.epsilon,
        v_empty,
        v_grand,
        evals: 0,
        sums: vec![0.0; m],
        counts: vec![0; m],
        prefix: Vec::with_capacity(m),
    };

    match cfg.sampling {
        Sampling::Exhaustive => {
            for pivot in 0..m {
                let mut rest: Vec<usize> = (0..m).filter(|&p| p != pivot).collect();
                loop {
                    let mut perm = Vec::with_capacity(m);
                    perm.push(pivot);
                    perm.extend_from_slice(&rest);
                    scanner.scan(players, &perm)?;
                    report.permutations_used += 1;
                    if !next_permutation(&mut rest) {
                        break;
                    }
                }
            }
            report.sampling_rounds = 1;
        }
        Sampling::Random => {
            let tol = cfg.convergence_tol.unwrap_or(cfg.epsilon);
            let window = cfg.convergence_window;
            let mut history: Vec<Vec<f64>> = Vec::new();
            let mut perm = Vec::with_capacity(m);
            for _ in 0..cfg.max_iters_for(m) {
                for pivot in 0..m {
                    perm.clear();
                    perm.extend((0..m).filter(|&p| p != pivot));
                    perm.shuffle(rng);
                    perm.insert(0, pivot);
                    scanner.scan(players, &perm)?;
                    report.permutations_used += 1;
                }
                report.sampling_rounds += 1;
                history.push(scanner.means());
                if history.len() > window {
                    let recent = &history[history.len() - window - 1..];
                    let max_change = recent
                        .windows(2)
                        .flat_map(|w| w[0].iter().zip(&w[1]).map(|(a, b)| (a - b).abs()))
                        .fold(0.0, f64::max);
                    if max_change < tol {
                        report.converged = true;
                        break;
                    }
                }
            }
        }
    }

    report.utility_evals += scanner.evals;
    for (pos, mean) in scanner.means().into_iter().enumerate() {
        report.round_sv.insert(players[pos], mean);
    }
    Ok(report)
}

/// Advances to the next lexicographic permutation; false once the sequence wraps.
fn next_permutation(xs: &mut [usize]) -> bool {
    if xs.len() < 2 {
        return false;
    }
    let mut i = xs.len() - 1;
    while i > 0 && xs[i - 1] >= xs[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = xs.len() - 1;
    while xs[j] <= xs[i - 1] {
        j -= 1;
    }
    xs.swap(i - 1, j);
    xs[i..].reverse();
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn next_permutation_visits_all_orders() {
        let mut xs = vec![0, 1, 2, 3];
        let mut n = 1;
        while next_permutation(&mut xs) {
            n += 1;
        }
        assert_eq!(n, 24);
    }

    #[test]
    fn flat_game_truncates_between_rounds() {
        let u = |_: &[usize]| -> Result<f64> { Ok(-0.7) };
        let r = gtg_shapley(&u, &[3, 1, 4], &GtgConfig::default(), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(r.truncated_between_rounds);
        assert!(r.round_sv.values().all(|&v| v == 0.0));
        assert_eq!(r.round_sv.keys().copied().collect::<Vec<_>>(), vec![1, 3, 4]);
        assert_eq!(r.utility_evals, 2);
    }

    #[test]
    fn single_player_takes_the_whole_gap() {
        let u = |s: &[usize]| -> Result<f64> { Ok(if s.is_empty() { 0.0 } else { 0.3 }) };
        let r = gtg_shapley(&u, &[9], &GtgConfig::default(), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!((r.round_sv[&9] - 0.3).abs() < 1e-12);
        assert!(!r.truncated_between_rounds);
        assert!(r.converged);
    }

    #[test]
    fn rejects_bad_input() {
        let u = |_: &[usize]| -> Result<f64> { Ok(0.0) };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(gtg_shapley(&u, &[], &GtgConfig::default(), &mut rng).is_err());
        let cfg = GtgConfig { epsilon: 0.0, ..GtgConfig::default() };
        assert!(gtg_shapley(&u, &[1], &cfg, &mut rng).is_err());
        let cfg = GtgConfig { sampling: Sampling::Exhaustive, ..GtgConfig::default() };
        let many: Vec<usize> = (0..9).collect();
        assert!(matches!(gtg_shapley(&u, &many, &cfg, &mut rng), Err(Error::Capacity { .. })));
    }
}
