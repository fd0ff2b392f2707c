use super::ParamVector;
use crate::error::{Error, Result};

/// One client's contribution to an average: its index, its sample count and its parameters.
#[derive(Debug, Clone, Copy)]
pub struct AveragingEntry<'a> {
    pub client: usize,
    pub samples: usize,
    pub params: &'a ParamVector,
}

/// Dataset-size weighted average `sum_k (n_k / sum_j n_j) * w_k`.
///
/// Entries are summed in ascending client order so the result is independent
/// of the order the caller collected them in.
pub fn model_average(entries: &[AveragingEntry<'_>]) -> Result<ParamVector> {
    let first = entries
        .first()
        .ok_or_else(|| Error::Input("model_average needs at least one entry".into()))?;
    if entries.iter().any(|e| e.samples == 0) {
        return Err(Error::Input("averaging weight n_k must be positive".into()));
    }
    if entries.iter().any(|e| !e.params.same_layout(first.params)) {
        return Err(Error::Config("cannot average parameters with different layouts".into()));
    }
    let mut sorted: Vec<&AveragingEntry<'_>> = entries.iter().collect();
    sorted.sort_by_key(|e| e.client);
    let total: usize = sorted.iter().map(|e| e.samples).sum();

    let len = first.params.len();
    let mut out = vec![0.0; len];
    let mut lo = vec![f64::INFINITY; len];
    let mut hi = vec![f64::NEG_INFINITY; len];
    for e in &sorted {
        let lambda = e.samples as f64 / total as f64;
        for (i, &v) in e.params.values().iter().enumerate() {
            out[i] += lambda * v;
            lo[i] = lo[i].min(v);
            hi[i] = hi[i].max(v);
        }
    }
    // Rounding can push a convex combination an ulp past the input range.
    for ((o, l), h) in out.iter_mut().zip(&lo).zip(&hi) {
        *o = o.clamp(*l, *h);
    }
    first.params.with_values(out)
}
