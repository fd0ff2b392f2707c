//! Deterministic federated-learning simulation with Shapley-value client selection.
//!
//! The crate is organised bottom-up:
//!
//! - [`nn`]: a small MLP with manual backpropagation, client-side SGD and
//!   weighted model averaging over flat [`nn::ParamVector`]s.
//! - [`shapley`]: coalition utilities, the exact Shapley oracle, the truncated
//!   Monte Carlo estimator used at the server, and cumulative per-client values.
//! - [`selection`]: client-selection strategies behind one `select` entry point.
//! - [`data`]: IDX ingestion, synthetic blobs, Dirichlet label-skew partitioning
//!   and straggler/noise heterogeneity.
//! - [`sim`]: the round loop, the centralized baseline, multi-seed comparison
//!   and run persistence.
//!
//! Every source of randomness is derived from a single 64-bit seed through
//! [`rng::stream_rng`], so a run is a pure function of its configuration.

pub mod data;
pub mod error;
pub mod nn;
pub mod rng;
pub mod selection;
pub mod shapley;
pub mod sim;
pub mod stats;

pub use error::{Error, Result};
