//! A small, deterministic neural engine.
//!
//! Networks are DAGs of a fixed layer vocabulary (dense, convolution,
//! transposed convolution, activations, reshapes, concatenation, addition,
//! weighted global pooling), compiled from a serializable definition with
//! full shape inference. The executor supports batched forward passes,
//! reverse-mode gradients with fan-out accumulation, Adam training with
//! keyed shuffling, and a compact binary checkpoint format. Everything is
//! bit-reproducible from seeds: there is no global RNG, no threading in the
//! math kernels, and no platform-dependent ordering.

mod checkpoint;
mod count;
mod graph;
mod layer;
mod tensor;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, TrainMeta};
pub use count::{count_macs, count_params, gmacs};
pub use graph::{
    ForwardTrace, Gradients, NetBuilder, Network, NetworkDef, Node, NodeParams, PortRef,
};
pub use layer::{conv_out_side, conv_transpose_out_side, LayerArity, LayerDef};
pub use tensor::{image_to_tensor, tensor_to_image, Tensor};
pub use train::{
    apply_loss, mse_loss, predict_all, softmax_cross_entropy, train, train_with, Adam, Loss,
    TrainConfig, TrainData, TrainReport,
};

use std::path::PathBuf;
use thiserror::Error;

/// Errors from building, running, training, or persisting networks.
#[derive(Debug, Error)]
pub enum NnError {
    #[error("bad graph: {0}")]
    BadGraph(String),
    #[error("bad shape: {0}")]
    BadShape(String),
    #[error("bad training configuration: {0}")]
    BadConfig(String),
    #[error("training diverged at epoch {epoch}, batch {batch} (loss {loss})")]
    Diverged { epoch: usize, batch: usize, loss: f64 },
    #[error("checkpoint rejected: {0}")]
    BadCheckpoint(String),
    #[error("i/o failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("serialization failure: {0}")]
    Json(#[from] serde_json::Error),
}
