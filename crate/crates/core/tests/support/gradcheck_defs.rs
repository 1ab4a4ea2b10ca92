//! Central-difference gradient-check harness plus the single-layer case
//! definitions, shared between the layer gradient tests and the acceptance
//! suite via `#[path]` inclusion. Checks run in `f64`, where central
//! differences resolve gradients to ~1e-10, so the 1e-4 gate has a wide
//! margin over numerical noise.
#![allow(dead_code)]

use aquaforge::nn::{LayerDef, NetBuilder, Network, NetworkDef, PortRef, Tensor};
use aquaforge::rng::{derive_key, KeyedRng};

pub const STEP: f64 = 1e-5;
pub const TOLERANCE: f64 = 1e-4;

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Values bounded away from zero so activation kinks never straddle the
/// finite-difference step.
fn signed_unit(rng: &mut KeyedRng) -> f64 {
    let mag = 0.2 + 0.8 * rng.uniform();
    if rng.uniform() < 0.5 {
        -mag
    } else {
        mag
    }
}

fn projected_loss(net: &Network<f64>, x: &Tensor<f64>, r: &[f64]) -> f64 {
    let y = net.forward(x.clone()).expect("forward");
    y.data().iter().zip(r).map(|(a, b)| a * b).sum()
}

/// Checks analytic gradients of `def` (parameters and input) against central
/// differences; returns the worst relative error observed.
pub fn max_gradient_error(def: NetworkDef, seed: u64, batch: usize) -> f64 {
    let mut net = Network::<f64>::init(def, seed).expect("compile");
    let mut rng = KeyedRng::new(derive_key(seed, &[0xC0FFEE]));

    let mut in_shape = vec![batch];
    in_shape.extend_from_slice(&net.def().input_shape);
    let x = Tensor::from_fn(in_shape, |_| signed_unit(&mut rng));

    let trace = net.forward_trace(x.clone()).expect("forward");
    let r: Vec<f64> = (0..trace.output().len())
        .map(|_| rng.uniform() - 0.5)
        .collect();
    let d_out = Tensor::new(trace.output().shape().to_vec(), r.clone()).expect("projection");
    let mut grads = net.zero_grads();
    let dx = net.backward(&trace, &d_out, &mut grads).expect("backward");

    let mut worst = 0.0f64;

    // Input gradient.
    let mut probe = x.clone();
    for i in 0..probe.len() {
        let orig = probe.data()[i];
        probe.data_mut()[i] = orig + STEP;
        let up = projected_loss(&net, &probe, &r);
        probe.data_mut()[i] = orig - STEP;
        let down = projected_loss(&net, &probe, &r);
        probe.data_mut()[i] = orig;
        let numeric = (up - down) / (2.0 * STEP);
        worst = worst.max(rel_err(dx.data()[i], numeric));
    }

    // Parameter gradients, node by node.
    for node in 0..net.params().len() {
        for is_bias in [false, true] {
            let len = if is_bias {
                net.params()[node].bias.len()
            } else {
                net.params()[node].weight.len()
            };
            for i in 0..len {
                let read = |net: &Network<f64>| {
                    let p = &net.params()[node];
                    if is_bias {
                        p.bias[i]
                    } else {
                        p.weight[i]
                    }
                };
                let write = |net: &mut Network<f64>, v: f64| {
                    let p = &mut net.params_mut()[node];
                    if is_bias {
                        p.bias[i] = v;
                    } else {
                        p.weight[i] = v;
                    }
                };
                let orig = read(&net);
                write(&mut net, orig + STEP);
                let up = projected_loss(&net, &x, &r);
                write(&mut net, orig - STEP);
                let down = projected_loss(&net, &x, &r);
                write(&mut net, orig);
                let numeric = (up - down) / (2.0 * STEP);
                let analytic = {
                    let g = &grads.nodes[node];
                    if is_bias {
                        g.bias[i]
                    } else {
                        g.weight[i]
                    }
                };
                worst = worst.max(rel_err(analytic, numeric));
            }
        }
    }
    worst
}

/// The six differentiable layer kinds, each as a tiny graph with the seed
/// and batch size its gradient check runs at.
pub fn single_layer_cases() -> Vec<(&'static str, NetworkDef, u64, usize)> {
    let dense = {
        let mut b = NetBuilder::new(&[5]);
        b.chain(LayerDef::Dense { in_features: 5, out_features: 4 });
        b.finish()
    };
    let conv = {
        let mut b = NetBuilder::new(&[2, 6, 5]);
        b.chain(LayerDef::Conv2d {
            in_channels: 2,
            out_channels: 3,
            kernel: 3,
            stride: 2,
            padding: 1,
        });
        b.finish()
    };
    let conv_t = {
        let mut b = NetBuilder::new(&[3, 4, 4]);
        b.chain(LayerDef::ConvTranspose2d {
            in_channels: 3,
            out_channels: 2,
            kernel: 3,
            stride: 2,
            padding: 1,
        });
        b.finish()
    };
    let leaky = {
        let mut b = NetBuilder::new(&[2, 4, 4]);
        b.chain(LayerDef::Conv2d {
            in_channels: 2,
            out_channels: 2,
            kernel: 1,
            stride: 1,
            padding: 0,
        });
        b.chain(LayerDef::LeakyRelu { negative_slope: 0.01 });
        b.finish()
    };
    let sigmoid = {
        let mut b = NetBuilder::new(&[6]);
        b.chain(LayerDef::Dense { in_features: 6, out_features: 4 });
        b.chain(LayerDef::Sigmoid);
        b.finish()
    };
    let pool = {
        let mut b = NetBuilder::new(&[3, 4, 5]);
        b.chain(LayerDef::WeightedGlobalAvgPool);
        b.chain(LayerDef::Dense { in_features: 3, out_features: 2 });
        b.finish()
    };
    vec![
        ("dense", dense, 11, 3),
        ("conv2d", conv, 13, 2),
        ("conv_transpose2d", conv_t, 17, 2),
        ("leaky_relu", leaky, 19, 2),
        ("sigmoid", sigmoid, 23, 3),
        ("weighted_global_avg_pool", pool, 29, 2),
    ]
}
