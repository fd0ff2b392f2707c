use std::collections::BTreeMap;

use super::utility::{eval_with_context, CoalitionUtility};
use crate::error::{Error, Result};

pub const EXACT_PLAYER_LIMIT: usize = 20;

/// Exact Shapley values by enumerating all `2^M` coalitions.
///
/// `SV_k = sum over S not containing k of |S|! (M-|S|-1)! / M! * (U(S+k) - U(S))`.
pub fn exact_shapley<U: CoalitionUtility + ?Sized>(u: &U, players: &[usize]) -> Result<BTreeMap<usize, f64>> {
    let m = players.len();
    if m > EXACT_PLAYER_LIMIT {
        return Err(Error::Capacity {
            players: m,
            limit: EXACT_PLAYER_LIMIT,
        });
    }
    let mut sorted = players.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Input(format!("duplicate players in {players:?}")));
    }
    if m == 0 {
        return Ok(BTreeMap::new());
    }

    // Bit i of a mask refers to sorted[i], so member lists come out ascending.
    let mut worth = vec![0.0; 1 << m];
    let mut members = Vec::with_capacity(m);
    for (mask, w) in worth.iter_mut().enumerate() {
        members.clear();
        members.extend((0..m).filter(|i| mask & (1 << i) != 0).map(|i| sorted[i]));
        *w = eval_with_context(u, &members)?;
    }

    // weight[s] = 1 / (M * C(M-1, s))
    let mut weight = vec![0.0; m];
    let mut binom = 1.0;
    for (s, w) in weight.iter_mut().enumerate() {
        *w = 1.0 / (m as f64 * binom);
        binom = binom * (m - 1 - s) as f64 / (s + 1) as f64;
    }

    let mut out = BTreeMap::new();
    for (i, &player) in sorted.iter().enumerate() {
        let bit = 1usize << i;
        let mut sv = 0.0;
        for mask in 0..worth.len() {
            if mask & bit == 0 {
                let s = mask.count_ones() as usize;
                sv += weight[s] * (worth[mask | bit] - worth[mask]);
            }
        }
        out.insert(player, sv);
    }
    Ok(out)
}
