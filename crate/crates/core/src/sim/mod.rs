//! End-to-end simulation: data preparation, the selection/training/valuation
//! round loop, the centralized baseline, multi-seed comparison and run
//! persistence.

mod compare;
mod config;
mod persist;
mod prepare;
mod run;

pub use compare::{compare, summarize, CompareError, Summary, SummaryRow};
pub use config::{DataSource, SimConfig, SvBackend, SyntheticSource};
pub use persist::{config_hash, read_rounds_csv, write_rounds_csv, write_run, CsvRound, ROUNDS_HEADER};
pub use prepare::{prepare_data, FederatedData};
pub use run::{final_accuracy, run, run_any, run_centralized, run_with_data, RoundRecord, RunResult, SimError};
