use super::SvReport;
use crate::error::{Error, Result};

/// How per-round values are folded into a client's cumulative value.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SvMode {
    /// Arithmetic mean over the rounds the client was selected in.
    Mean,
    /// `SV <- alpha * SV + (1 - alpha) * SV_round`; the first observation is taken as is.
    Exponential { alpha: f64 },
}

impl SvMode {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SvMode::Exponential { alpha } if !(0.0..1.0).contains(&alpha) => Err(Error::Config(format!(
                "exponential averaging alpha {alpha} outside [0, 1)"
            ))),
            _ => Ok(()),
        }
    }
}

/// Per-client selection counts `N_k` and cumulative Shapley values.
///
/// A client that has never been valued has no value at all (`None`); it is
/// never treated as zero.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulativeSv {
    mode: SvMode,
    values: Vec<Option<f64>>,
    counts: Vec<usize>,
}

impl CumulativeSv {
    pub fn new(num_clients: usize, mode: SvMode) -> Self {
        CumulativeSv {
            mode,
            values: vec![None; num_clients],
            counts: vec![0; num_clients],
        }
    }

    pub fn mode(&self) -> SvMode {
        self.mode
    }

    pub fn num_clients(&self) -> usize {
        self.counts.len()
    }

    pub fn value(&self, client: usize) -> Option<f64> {
        self.values[client]
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    pub fn count(&self, client: usize) -> usize {
        self.counts[client]
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn total_selections(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn all_initialized(&self) -> bool {
        self.values.iter().all(Option::is_some)
    }

    /// Increments `N_k`; called once per selection, before [`CumulativeSv::update`].
    pub fn record_selection(&mut self, client: usize) -> Result<()> {
        let c = self
            .counts
            .get_mut(client)
            .ok_or_else(|| Error::Logic(format!("client {client} out of range")))?;
        *c += 1;
        Ok(())
    }

    /// Folds one round's values into the cumulative ones.
    pub fn update(&mut self, report: &SvReport) -> Result<()> {
        for (&k, &round_sv) in &report.round_sv {
            let n = *self
                .counts
                .get(k)
                .ok_or_else(|| Error::Logic(format!("client {k} out of range")))?;
            if n == 0 {
                return Err(Error::Logic(format!(
                    "client {k} valued before its selection was recorded"
                )));
            }
            let next = match (self.mode, self.values[k]) {
                (_, None) => round_sv,
                (SvMode::Mean, Some(prev)) => ((n - 1) as f64 * prev + round_sv) / n as f64,
                (SvMode::Exponential { alpha }, Some(prev)) => alpha * prev + (1.0 - alpha) * round_sv,
            };
            self.values[k] = Some(next);
        }
        Ok(())
    }
}

/// Functional form of [`CumulativeSv::update`].
pub fn update_cumulative(mut c: CumulativeSv, report: &SvReport) -> Result<CumulativeSv> {
    c.update(report)?;
    Ok(c)
}
