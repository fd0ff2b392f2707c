//! Minimal trainable model: a dense MLP over flat parameter vectors, its
//! client-side SGD loop, and dataset-size weighted model averaging.

mod average;
mod dataset;
mod mlp;
mod params;
mod train;

pub use average::{model_average, AveragingEntry};
pub use dataset::Dataset;
pub use mlp::{forward_loss, Activation, Architecture, Evaluation, MlpModel};
pub use params::{LayerShape, Layout, ParamVector};
pub use train::{batch_objective, client_update, epoch_batches, TrainConfig};
