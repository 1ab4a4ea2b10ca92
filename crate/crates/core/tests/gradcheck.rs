//! Central-difference gradient checks for every differentiable layer and
//! for graphs with shared inputs (fan-out). The harness and the
//! single-layer cases live in `support/gradcheck_defs.rs`, shared with the
//! acceptance suite.

#[path = "support/gradcheck_defs.rs"]
mod defs;

use aquaforge::nn::{LayerDef, NetBuilder, PortRef};
use defs::{max_gradient_error, single_layer_cases, TOLERANCE};

#[test]
fn single_layer_gradients_match_central_differences() {
    for (name, def, seed, batch) in single_layer_cases() {
        let err = max_gradient_error(def, seed, batch);
        assert!(err < TOLERANCE, "{name}: worst relative error {err}");
    }
}

#[test]
fn fan_out_graph_gradients_match_central_differences() {
    // The input feeds two branches and one branch output is consumed twice,
    // so backward must accumulate across consumers to pass.
    let mut b = NetBuilder::new(&[3, 6, 6]);
    let trunk = b.chain(LayerDef::Conv2d {
        in_channels: 3,
        out_channels: 4,
        kernel: 3,
        stride: 1,
        padding: 1,
    });
    let trunk = b.push(LayerDef::LeakyRelu { negative_slope: 0.1 }, &[trunk]);
    let skip = b.push(
        LayerDef::Conv2d {
            in_channels: 3,
            out_channels: 4,
            kernel: 1,
            stride: 1,
            padding: 0,
        },
        &[PortRef::Input],
    );
    let merged = b.push(LayerDef::Concat, &[trunk, skip]);
    let squeezed = b.push(
        LayerDef::Conv2d {
            in_channels: 8,
            out_channels: 4,
            kernel: 1,
            stride: 1,
            padding: 0,
        },
        &[merged],
    );
    let summed = b.push(LayerDef::Add, &[squeezed, trunk]);
    b.push(LayerDef::Flatten, &[summed]);
    b.chain(LayerDef::Dense { in_features: 4 * 36, out_features: 3 });
    b.chain(LayerDef::Sigmoid);
    let err = max_gradient_error(b.finish(), 31, 2);
    assert!(err < TOLERANCE, "worst relative error {err}");
}

#[test]
fn autoencoder_shape_gradients_match_central_differences() {
    // Flatten → bottleneck → Unflatten, the enhancement-net skeleton.
    let mut b = NetBuilder::new(&[3, 4, 4]);
    b.chain(LayerDef::Flatten);
    b.chain(LayerDef::Dense { in_features: 48, out_features: 6 });
    b.chain(LayerDef::LeakyRelu { negative_slope: 0.01 });
    b.chain(LayerDef::Dense { in_features: 6, out_features: 48 });
    b.chain(LayerDef::Sigmoid);
    b.chain(LayerDef::Unflatten { channels: 3, height: 4, width: 4 });
    let err = max_gradient_error(b.finish(), 37, 2);
    assert!(err < TOLERANCE, "worst relative error {err}");
}
