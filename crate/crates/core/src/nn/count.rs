//! Static accounting: parameter and multiply-accumulate counts straight from
//! a network definition, with no tensor allocation. Used for the budget
//! tables and the complexity gates, so large-input architectures can be
//! audited without ever materializing their activations.

use super::graph::{input_channels_of, NetworkDef};
use super::layer::LayerDef;
use super::NnError;

/// Total trainable scalars in a definition.
pub fn count_params(def: &NetworkDef) -> Result<u64, NnError> {
    let shapes = def.infer_shapes()?;
    let mut total = 0u64;
    for (idx, node) in def.nodes.iter().enumerate() {
        let in_ch = input_channels_of(def, &shapes, idx);
        let (w, b) = node.layer.param_lens(in_ch);
        total += (w + b) as u64;
    }
    Ok(total)
}

/// Multiply-accumulate operations for one sample (batch axis excluded).
///
/// Only the dense/convolutional/pooling layers count; activations, reshapes,
/// concatenation, and addition contribute no multiplies.
pub fn count_macs(def: &NetworkDef) -> Result<u64, NnError> {
    let shapes = def.infer_shapes()?;
    let mut total = 0u64;
    for (idx, node) in def.nodes.iter().enumerate() {
        let input_shape = match node.inputs.first() {
            Some(super::graph::PortRef::Input) => def.input_shape.clone(),
            Some(super::graph::PortRef::Node(j)) => shapes[*j].clone(),
            None => continue,
        };
        total += match node.layer {
            LayerDef::Dense { in_features, out_features } => {
                in_features as u64 * out_features as u64
            }
            LayerDef::Conv2d { in_channels, out_channels, kernel, .. } => {
                let out = &shapes[idx];
                (out[1] * out[2]) as u64
                    * out_channels as u64
                    * (kernel * kernel * in_channels) as u64
            }
            LayerDef::ConvTranspose2d { in_channels, out_channels, kernel, .. } => {
                // Every input position contributes a k×k stamp per channel pair.
                (input_shape[1] * input_shape[2]) as u64
                    * in_channels as u64
                    * (kernel * kernel * out_channels) as u64
            }
            LayerDef::WeightedGlobalAvgPool => {
                (input_shape[0] * input_shape[1] * input_shape[2]) as u64
            }
            _ => 0,
        };
    }
    Ok(total)
}

/// [`count_macs`] expressed in billions of multiply-accumulates.
pub fn gmacs(def: &NetworkDef) -> Result<f64, NnError> {
    Ok(count_macs(def)? as f64 / 1e9)
}
