//! Losses, the Adam optimizer, and the deterministic training loop.
//!
//! Training is bit-reproducible: batches are assembled from a keyed
//! per-epoch shuffle, every kernel is single-pass sequential, and the
//! optimizer state depends only on the gradient stream. Running the same
//! configuration twice yields identical parameters.

use super::graph::{Gradients, Network};
use super::tensor::Tensor;
use super::NnError;
use crate::rng::{derive_key, KeyedRng};
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};

/// Which objective the trainer optimizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    /// Mean over all elements of `(y − t)²`; for regression to images.
    MeanSquaredError,
    /// Row-wise softmax + cross-entropy against one-hot rows, averaged over
    /// the batch; for classification logits.
    SoftmaxCrossEntropy,
}

/// Mean squared error and its gradient: `L = Σ(y−t)²/N`, `∂L/∂y = 2(y−t)/N`
/// with `N` the total element count.
pub fn mse_loss<T: Scalar>(pred: &Tensor<T>, target: &Tensor<T>) -> Result<(T, Tensor<T>), NnError> {
    if pred.shape() != target.shape() {
        return Err(NnError::BadShape(format!(
            "loss shapes differ: {:?} vs {:?}",
            pred.shape(),
            target.shape()
        )));
    }
    let n = T::of_usize(pred.len());
    let mut grad = Tensor::zeros(pred.shape().to_vec());
    let mut loss = T::zero();
    for ((g, &y), &t) in grad.data_mut().iter_mut().zip(pred.data()).zip(target.data()) {
        let d = y - t;
        loss += d * d;
        *g = (d + d) / n;
    }
    Ok((loss / n, grad))
}

/// Softmax cross-entropy over rows with one-hot (or soft) targets:
/// per row `L = logsumexp(z) − Σ t·z` (for Σt = 1), averaged over the batch;
/// gradient `(softmax(z) − t)/batch`. Stable via the max-shift.
pub fn softmax_cross_entropy<T: Scalar>(
    logits: &Tensor<T>,
    targets: &Tensor<T>,
) -> Result<(T, Tensor<T>), NnError> {
    if logits.shape() != targets.shape() || logits.shape().len() != 2 {
        return Err(NnError::BadShape(format!(
            "classification loss wants matching [N, K] tensors, got {:?} vs {:?}",
            logits.shape(),
            targets.shape()
        )));
    }
    let n = logits.batch();
    let k = logits.sample_len();
    let inv_n = T::one() / T::of_usize(n);
    let mut grad = Tensor::zeros(logits.shape().to_vec());
    let mut loss = T::zero();
    for i in 0..n {
        let z = logits.sample(i);
        let t = targets.sample(i);
        let m = z.iter().copied().fold(T::neg_infinity(), T::max);
        let sum_exp: T = z.iter().map(|&v| (v - m).exp()).sum();
        let lse = m + sum_exp.ln();
        let g = grad.sample_mut(i);
        for j in 0..k {
            let p = (z[j] - m).exp() / sum_exp;
            g[j] = (p - t[j]) * inv_n;
            loss += t[j] * (lse - z[j]);
        }
    }
    Ok((loss * inv_n, grad))
}

/// Computes `loss` between predictions and targets.
pub fn apply_loss<T: Scalar>(
    loss: Loss,
    pred: &Tensor<T>,
    target: &Tensor<T>,
) -> Result<(T, Tensor<T>), NnError> {
    match loss {
        Loss::MeanSquaredError => mse_loss(pred, target),
        Loss::SoftmaxCrossEntropy => softmax_cross_entropy(pred, target),
    }
}

/// Adam optimizer with the canonical bias-corrected update.
#[derive(Clone, Debug)]
pub struct Adam<T> {
    lr: T,
    beta1: T,
    beta2: T,
    eps: T,
    step: u64,
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
}

impl<T: Scalar> Adam<T> {
    pub fn new(net: &Network<T>, learning_rate: f64) -> Self {
        let zeros: Vec<Vec<T>> = net
            .param_views()
            .iter()
            .map(|s| vec![T::zero(); s.len()])
            .collect();
        Self {
            lr: T::of(learning_rate),
            beta1: T::of(0.9),
            beta2: T::of(0.999),
            eps: T::of(1e-8),
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    /// Applies one update from the accumulated gradients.
    pub fn step(&mut self, net: &mut Network<T>, grads: &Gradients<T>) {
        self.step += 1;
        let t = self.step as i32;
        let c1 = T::one() - self.beta1.powi(t);
        let c2 = T::one() - self.beta2.powi(t);
        let one = T::one();
        let mut params = net.param_views_mut();
        let gslices = grads.slices();
        debug_assert_eq!(params.len(), gslices.len());
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(&gslices)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            debug_assert_eq!(p.len(), g.len());
            for i in 0..p.len() {
                let gi = g[i];
                m[i] = self.beta1 * m[i] + (one - self.beta1) * gi;
                v[i] = self.beta2 * v[i] + (one - self.beta2) * gi * gi;
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
    }
}

/// A supervised dataset: matching input/target tensors whose first axis is
/// the sample index.
#[derive(Clone, Debug)]
pub struct TrainData<T> {
    pub inputs: Tensor<T>,
    pub targets: Tensor<T>,
}

impl<T: Scalar> TrainData<T> {
    pub fn new(inputs: Tensor<T>, targets: Tensor<T>) -> Result<Self, NnError> {
        if inputs.batch() != targets.batch() || inputs.batch() == 0 {
            return Err(NnError::BadShape(format!(
                "dataset wants matching non-empty batches, got {:?} vs {:?}",
                inputs.shape(),
                targets.shape()
            )));
        }
        Ok(Self { inputs, targets })
    }

    pub fn len(&self) -> usize {
        self.inputs.batch()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Hyperparameters for one training run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub loss: Loss,
    /// Seeds the per-epoch shuffles (independent of parameter init).
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(epochs: usize, batch_size: usize, learning_rate: f64, loss: Loss, seed: u64) -> Self {
        Self {
            epochs,
            batch_size,
            learning_rate,
            loss,
            seed,
        }
    }
}

/// Summary of a completed run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean per-batch loss of each epoch.
    pub epoch_losses: Vec<f64>,
    /// Up to the last five epoch losses, oldest first.
    pub loss_tail: Vec<f64>,
}

/// Trains in place; see [`train_with`] for progress callbacks.
pub fn train<T: Scalar>(
    net: &mut Network<T>,
    data: &TrainData<T>,
    config: &TrainConfig,
) -> Result<TrainReport, NnError> {
    train_with(net, data, config, |_, _| {})
}

/// Trains `net` on `data`, invoking `on_epoch(epoch_index, mean_loss)` after
/// each epoch. Errors out (preserving no-longer-meaningful parameters) if
/// the loss turns non-finite.
pub fn train_with<T: Scalar>(
    net: &mut Network<T>,
    data: &TrainData<T>,
    config: &TrainConfig,
    mut on_epoch: impl FnMut(usize, f64),
) -> Result<TrainReport, NnError> {
    if config.batch_size == 0 || config.epochs == 0 {
        return Err(NnError::BadConfig(
            "epochs and batch_size must be positive".into(),
        ));
    }
    let n = data.len();
    let input_item = &data.inputs.shape()[1..].to_vec();
    let target_item = &data.targets.shape()[1..].to_vec();
    let mut optimizer = Adam::new(net, config.learning_rate);
    let mut grads = net.zero_grads();
    let mut order: Vec<usize> = (0..n).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let mut rng = KeyedRng::new(derive_key(config.seed, &[epoch as u64]));
        order.sort_unstable();
        rng.shuffle(&mut order);

        let mut epoch_loss = 0.0f64;
        let mut batches = 0usize;
        for chunk in order.chunks(config.batch_size) {
            let xs: Vec<&[T]> = chunk.iter().map(|&i| data.inputs.sample(i)).collect();
            let ts: Vec<&[T]> = chunk.iter().map(|&i| data.targets.sample(i)).collect();
            let x = Tensor::stack(input_item, &xs)?;
            let t = Tensor::stack(target_item, &ts)?;

            let trace = net.forward_trace(x)?;
            let (loss, d_out) = apply_loss(config.loss, trace.output(), &t)?;
            let loss = loss.as_f64();
            if !loss.is_finite() {
                return Err(NnError::Diverged {
                    epoch,
                    batch: batches,
                    loss,
                });
            }
            grads.zero();
            net.backward(&trace, &d_out, &mut grads)?;
            optimizer.step(net, &grads);
            epoch_loss += loss;
            batches += 1;
        }
        let mean = epoch_loss / batches.max(1) as f64;
        epoch_losses.push(mean);
        on_epoch(epoch, mean);
    }

    let tail_from = epoch_losses.len().saturating_sub(5);
    Ok(TrainReport {
        loss_tail: epoch_losses[tail_from..].to_vec(),
        epoch_losses,
    })
}

/// Runs the network over a dataset in fixed-size batches, returning the
/// stacked outputs; used for evaluation.
pub fn predict_all<T: Scalar>(
    net: &Network<T>,
    inputs: &Tensor<T>,
    batch_size: usize,
) -> Result<Tensor<T>, NnError> {
    let n = inputs.batch();
    let item = inputs.shape()[1..].to_vec();
    let out_item = net.output_shape().to_vec();
    let mut out = Tensor::zeros(
        std::iter::once(n).chain(out_item.iter().copied()).collect(),
    );
    let mut row = 0usize;
    let ids: Vec<usize> = (0..n).collect();
    for chunk in ids.chunks(batch_size.max(1)) {
        let xs: Vec<&[T]> = chunk.iter().map(|&i| inputs.sample(i)).collect();
        let x = Tensor::stack(&item, &xs)?;
        let y = net.forward(x)?;
        for i in 0..chunk.len() {
            out.sample_mut(row).copy_from_slice(y.sample(i));
            row += 1;
        }
    }
    Ok(out)
}
