use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::{RoundRecord, RunResult, SimConfig};
use crate::error::{Error, Result};

pub const ROUNDS_HEADER: &str = "t,selected,val_loss,test_loss,test_acc,sv_json,utility_evals,ms";

/// One row of `rounds.csv`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CsvRound {
    pub t: usize,
    /// Selected clients joined by `;`.
    pub selected: String,
    pub val_loss: f64,
    pub test_loss: f64,
    pub test_acc: f64,
    pub sv_json: String,
    pub utility_evals: usize,
    pub ms: u64,
}

impl From<&RoundRecord> for CsvRound {
    fn from(r: &RoundRecord) -> Self {
        CsvRound {
            t: r.t,
            selected: r.selected.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(";"),
            val_loss: r.val_loss_after,
            test_loss: r.test_loss,
            test_acc: r.test_accuracy,
            sv_json: serde_json::to_string(&r.sv).expect("map of floats serializes"),
            utility_evals: r.utility_evals,
            ms: r.elapsed_ms,
        }
    }
}

/// First 16 hex digits of the SHA-256 of the config's JSON form.
pub fn config_hash(cfg: &SimConfig) -> String {
    let json = serde_json::to_string(cfg).expect("config serializes");
    let digest = Sha256::digest(json.as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

pub fn write_rounds_csv(path: &Path, records: &[RoundRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(CsvRound::from(r))?;
    }
    if records.is_empty() {
        w.write_record(ROUNDS_HEADER.split(','))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_rounds_csv(path: &Path) -> Result<Vec<CsvRound>> {
    if !path.exists() {
        return Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
        ));
    }
    let mut r = csv::Reader::from_path(path)?;
    let rows = r.deserialize().collect::<std::result::Result<Vec<CsvRound>, _>>()?;
    Ok(rows)
}

/// Writes `rounds.csv` and `config.json` into `root/run-<hash>` and returns that directory.
pub fn write_run(root: &Path, result: &RunResult) -> Result<PathBuf> {
    let dir = root.join(format!("run-{}", config_hash(&result.config)));
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    write_rounds_csv(&dir.join("rounds.csv"), &result.records)?;
    let cfg_path = dir.join("config.json");
    let json = serde_json::to_string_pretty(&result.config)?;
    std::fs::write(&cfg_path, json + "\n").map_err(|e| Error::io(&cfg_path, e))?;
    Ok(dir)
}
