//! Client valuation for a single round and across rounds.
//!
//! A round's game is played by the selected clients; the worth of a coalition
//! is the negative validation loss of the dataset-weighted average of its
//! members' updates, and the empty coalition is worth the current server
//! model. [`exact_shapley`] enumerates all coalitions and serves as the
//! oracle for [`gtg_shapley`], the truncated permutation-sampling estimator
//! used during simulation.

mod cumulative;
mod exact;
mod gtg;
mod utility;

pub use cumulative::{update_cumulative, CumulativeSv, SvMode};
pub use exact::{exact_shapley, EXACT_PLAYER_LIMIT};
pub use gtg::{gtg_shapley, GtgConfig, Sampling, SvReport, EXHAUSTIVE_PLAYER_LIMIT};
pub use utility::{CoalitionUtility, CountingUtility, ValidationUtility};
