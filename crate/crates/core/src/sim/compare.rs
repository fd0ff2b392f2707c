use rayon::prelude::*;

use super::{run_any, SimConfig, SimError};
use crate::stats::{mean, sample_std};

/// Final test accuracies of one configuration across seeds.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SummaryRow {
    pub label: String,
    pub seeds: Vec<u64>,
    pub accuracies: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

impl SummaryRow {
    /// `mean ± std` in percent with two decimals, e.g. `94.06 ± 0.19`.
    pub fn cell(&self) -> String {
        format!("{:.2} ± {:.2}", 100.0 * self.mean, 100.0 * self.std)
    }
}

pub fn summarize(label: impl Into<String>, seeds: &[u64], accuracies: &[f64]) -> SummaryRow {
    SummaryRow {
        label: label.into(),
        seeds: seeds.to_vec(),
        accuracies: accuracies.to_vec(),
        mean: mean(accuracies),
        std: sample_std(accuracies),
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Summary {
    pub rows: Vec<SummaryRow>,
}

impl Summary {
    pub fn row(&self, label: &str) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.label == label)
    }

    pub fn to_table(&self) -> String {
        let width = self.rows.iter().map(|r| r.label.len()).max().unwrap_or(9).max(9);
        let mut s = format!("{:<width$} | Accuracy (%)\n", "Algorithm");
        s.push_str(&format!("{}-+-{}\n", "-".repeat(width), "-".repeat(15)));
        for r in &self.rows {
            s.push_str(&format!("{:<width$} | {}\n", r.label, r.cell()));
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("label,mean,std,n,accuracies\n");
        for r in &self.rows {
            let accs: Vec<String> = r.accuracies.iter().map(|a| a.to_string()).collect();
            s.push_str(&format!("{},{},{},{},{}\n", r.label, r.mean, r.std, r.accuracies.len(), accs.join(";")));
        }
        s
    }
}

#[derive(Debug, thiserror::Error)]
#[error("config {config_index} ({label}), seed {seed}: {source}")]
pub struct CompareError {
    pub config_index: usize,
    pub label: String,
    pub seed: u64,
    #[source]
    pub source: SimError,
}

/// Runs every `(config, seed)` pair and reports mean and sample standard
/// deviation of the final-round test accuracy per configuration.
pub fn compare(cfgs: &[SimConfig], seeds: &[u64]) -> Result<Summary, CompareError> {
    let jobs: Vec<(usize, u64)> = (0..cfgs.len())
        .flat_map(|i| seeds.iter().map(move |&s| (i, s)))
        .collect();
    let accs = jobs
        .par_iter()
        .map(|&(i, seed)| {
            let cfg = cfgs[i].clone().with_seed(seed);
            run_any(&cfg).map(|r| r.final_accuracy()).map_err(|source| CompareError {
                config_index: i,
                label: cfgs[i].display_label(),
                seed,
                source,
            })
        })
        .collect::<Result<Vec<f64>, _>>()?;
    let rows = cfgs
        .iter()
        .enumerate()
        .map(|(i, cfg)| summarize(cfg.display_label(), seeds, &accs[i * seeds.len()..(i + 1) * seeds.len()]))
        .collect();
    Ok(Summary { rows })
}
