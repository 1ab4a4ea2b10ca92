//! Nine-way dominant-degradation classifier: compact residual architecture,
//! winner-take-all inference, and accuracy / F1 / confusion reporting.
//!
//! The network is intentionally small (≈0.2M parameters at any input size —
//! every spatial stage is fully convolutional and the head pools globally):
//! a 3×3 stem to 128 channels, two residual blocks that split into parallel
//! 1×1 and 3×3 paths before re-merging, a learned-weight global average
//! pool, and a dense projection to the nine class logits.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::degrade::{DatasetManifest, DegradationClass, DegradeError, Split};
use crate::image::io::load_image;
use crate::image::ops::resize_bilinear;
use crate::image::{ImageError, ImageF};
use crate::nn::{
    count_params, image_to_tensor, predict_all, train_with, LayerDef, NetBuilder, Network,
    NetworkDef, NnError, Tensor, TrainConfig, TrainData, TrainReport,
};
use crate::scalar::Scalar;

/// Number of classes the classifier distinguishes.
pub const CLASS_COUNT: usize = 9;

/// Stem / merge width of the residual trunk.
const TRUNK_WIDTH: usize = 128;
/// Width of each parallel branch inside a residual block.
const BRANCH_WIDTH: usize = 64;
const LEAKY_SLOPE: f64 = 0.01;

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("classifier wants a 3-channel {side}×{side} image, got {got}")]
    WrongInput { side: usize, got: String },
    #[error("network output is {got:?}, not the {CLASS_COUNT} class logits")]
    NotAClassifier { got: Vec<usize> },
    #[error("{split:?} split of the manifest has no rows")]
    EmptySplit { split: Split },
    #[error(transparent)]
    Degrade(#[from] DegradeError),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Nn(#[from] NnError),
}

/// One inference result: raw logits, the winning class, and the softmax
/// probability assigned to it.
#[derive(Clone, Copy, Debug)]
pub struct ClassifierOutput<T> {
    pub logits: [T; CLASS_COUNT],
    pub predicted: DegradationClass,
    pub confidence: T,
}

impl<T: Scalar> ClassifierOutput<T> {
    /// Winner-take-all decision over raw logits. Ties break toward the
    /// lowest class code, so the all-equal case yields code 0.
    pub fn from_logits(logits: [T; CLASS_COUNT]) -> Self {
        let mut best = 0usize;
        for (i, &v) in logits.iter().enumerate().skip(1) {
            if v > logits[best] {
                best = i;
            }
        }
        let predicted = DegradationClass::from_code(best as u8)
            .expect("indices 0..9 are valid class codes");
        // Max-shifted softmax; the winner's shifted logit is exactly zero.
        let max = logits[best];
        let sum: T = logits.iter().map(|&v| (v - max).exp()).sum();
        Self {
            logits,
            predicted,
            confidence: T::one() / sum,
        }
    }
}

/// Builds the classifier graph for square 3-channel inputs of `input_side`
/// pixels (at least 16). The parameter count is independent of the input
/// size and lands at 201,993.
pub fn build_classifier(input_side: usize) -> NetworkDef {
    assert!(input_side >= 16, "classifier input side must be at least 16");
    let conv = |in_c: usize, out_c: usize, kernel: usize, padding: usize| LayerDef::Conv2d {
        in_channels: in_c,
        out_channels: out_c,
        kernel,
        stride: 1,
        padding,
    };
    let leaky = LayerDef::LeakyRelu {
        negative_slope: LEAKY_SLOPE,
    };

    let mut b = NetBuilder::new(&[3, input_side, input_side]);
    b.chain(conv(3, TRUNK_WIDTH, 3, 1));
    let mut trunk = b.chain(leaky.clone());
    for _ in 0..2 {
        let narrow = b.push(conv(TRUNK_WIDTH, BRANCH_WIDTH, 1, 0), &[trunk]);
        let narrow = b.push(leaky.clone(), &[narrow]);
        let wide = b.push(conv(TRUNK_WIDTH, BRANCH_WIDTH, 3, 1), &[trunk]);
        let wide = b.push(leaky.clone(), &[wide]);
        let cat = b.push(LayerDef::Concat, &[narrow, wide]);
        let merged = b.push(conv(TRUNK_WIDTH, TRUNK_WIDTH, 1, 0), &[cat]);
        let sum = b.push(LayerDef::Add, &[merged, trunk]);
        trunk = b.push(leaky.clone(), &[sum]);
    }
    b.chain(LayerDef::WeightedGlobalAvgPool);
    b.chain(LayerDef::Flatten);
    b.chain(LayerDef::Dense {
        in_features: TRUNK_WIDTH,
        out_features: CLASS_COUNT,
    });
    b.finish()
}

/// Square input side a compiled classifier expects.
pub fn input_side<T: Scalar>(net: &Network<T>) -> usize {
    net.def().input_shape.last().copied().unwrap_or(0)
}

/// Runs one image through the classifier and applies the winner-take-all
/// rule. The image must already match the network's input side.
pub fn classify<T: Scalar>(
    net: &Network<T>,
    img: &ImageF<T>,
) -> Result<ClassifierOutput<T>, ClassifierError> {
    if net.output_shape() != [CLASS_COUNT] {
        return Err(ClassifierError::NotAClassifier {
            got: net.output_shape().to_vec(),
        });
    }
    let side = input_side(net);
    if img.channels() != 3 || img.height() != side || img.width() != side {
        return Err(ClassifierError::WrongInput {
            side,
            got: img.shape_string(),
        });
    }
    let out = net.forward(image_to_tensor(img))?;
    let mut logits = [T::zero(); CLASS_COUNT];
    logits.copy_from_slice(&out.data()[..CLASS_COUNT]);
    Ok(ClassifierOutput::from_logits(logits))
}

/// Accuracy, per-class F1, and the raw confusion matrix for one evaluation
/// run. Rows of `confusion` are true classes, columns predictions.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EvalSummary {
    pub accuracy: f64,
    pub per_class_f1: [f64; CLASS_COUNT],
    pub macro_f1: f64,
    pub confusion: [[u64; CLASS_COUNT]; CLASS_COUNT],
    pub total: u64,
}

impl EvalSummary {
    /// Derives all scores from a confusion matrix. F1 is the harmonic mean
    /// of precision and recall, taken as 0 when undefined (no true or
    /// predicted samples for the class).
    pub fn from_confusion(confusion: [[u64; CLASS_COUNT]; CLASS_COUNT]) -> Self {
        let total: u64 = confusion.iter().flatten().sum();
        let trace: u64 = (0..CLASS_COUNT).map(|i| confusion[i][i]).sum();
        let mut per_class_f1 = [0.0f64; CLASS_COUNT];
        for (k, f1) in per_class_f1.iter_mut().enumerate() {
            let tp = confusion[k][k];
            let fn_: u64 = confusion[k].iter().sum::<u64>() - tp;
            let fp: u64 = (0..CLASS_COUNT).map(|i| confusion[i][k]).sum::<u64>() - tp;
            let denom = 2 * tp + fp + fn_;
            if denom > 0 {
                *f1 = 2.0 * tp as f64 / denom as f64;
            }
        }
        Self {
            accuracy: if total > 0 {
                trace as f64 / total as f64
            } else {
                0.0
            },
            per_class_f1,
            macro_f1: per_class_f1.iter().sum::<f64>() / CLASS_COUNT as f64,
            confusion,
            total,
        }
    }

    /// Renders the summary as aligned text for terminal reports.
    pub fn render(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "accuracy {:.4} over {} samples, macro-F1 {:.4}",
            self.accuracy, self.total, self.macro_f1
        );
        for class in DegradationClass::ALL {
            let _ = writeln!(
                out,
                "  {:<16} F1 {:.4}",
                class.name(),
                self.per_class_f1[class.code() as usize]
            );
        }
        out
    }
}

/// Images and labels ready for training or evaluation: inputs are stacked
/// `[n, 3, side, side]`, labels are class codes, ids keep row provenance.
#[derive(Clone, Debug)]
pub struct LabeledSet<T> {
    pub inputs: Tensor<T>,
    pub labels: Vec<u8>,
    pub ids: Vec<String>,
}

impl<T: Scalar> LabeledSet<T> {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// One-hot targets matching the label vector, for cross-entropy.
    pub fn one_hot_targets(&self) -> Tensor<T> {
        let n = self.labels.len();
        let mut t = Tensor::zeros(vec![n, CLASS_COUNT]);
        for (i, &code) in self.labels.iter().enumerate() {
            t.sample_mut(i)[code as usize] = T::one();
        }
        t
    }
}

/// Loads every manifest row of `split` as a labeled sample, resampling each
/// degraded image to `side`×`side` when necessary. Rows keep manifest order
/// (sorted by id), so the set is deterministic.
pub fn load_samples<T: Scalar>(
    manifest: &DatasetManifest,
    split: Split,
    side: usize,
) -> Result<LabeledSet<T>, ClassifierError> {
    use rayon::prelude::*;

    let rows: Vec<_> = manifest.rows_in_split(split).collect();
    if rows.is_empty() {
        return Err(ClassifierError::EmptySplit { split });
    }
    let samples: Vec<(String, u8, Vec<T>)> = rows
        .par_iter()
        .map(|row| -> Result<_, ClassifierError> {
            let img = load_image::<T>(&manifest.resolve(&row.degraded_path))?;
            let img = if img.height() == side && img.width() == side {
                img
            } else {
                resize_bilinear(&img, side, side)?
            };
            Ok((
                row.id.clone(),
                row.class_code,
                image_to_tensor(&img).into_data(),
            ))
        })
        .collect::<Result<_, _>>()?;

    let mut ids = Vec::with_capacity(samples.len());
    let mut labels = Vec::with_capacity(samples.len());
    let views: Vec<&[T]> = samples.iter().map(|(_, _, data)| data.as_slice()).collect();
    let inputs = Tensor::stack(&[3, side, side], &views)?;
    for (id, code, _) in samples {
        ids.push(id);
        labels.push(code);
    }
    Ok(LabeledSet { inputs, labels, ids })
}

/// Training hyperparameters for one classifier run.
#[derive(Clone, Debug)]
pub struct ClassifierTrainConfig {
    pub input_side: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for ClassifierTrainConfig {
    fn default() -> Self {
        Self {
            input_side: 32,
            epochs: 10,
            batch_size: 32,
            learning_rate: 1e-3,
            seed: 7,
        }
    }
}

/// Trains a fresh classifier on the manifest's train split with softmax
/// cross-entropy, reporting each epoch's mean loss through `on_epoch`.
pub fn train_classifier<T: Scalar>(
    manifest: &DatasetManifest,
    config: &ClassifierTrainConfig,
    on_epoch: impl FnMut(usize, f64),
) -> Result<(Network<T>, TrainReport), ClassifierError> {
    let set = load_samples::<T>(manifest, Split::Train, config.input_side)?;
    let targets = set.one_hot_targets();
    let mut net = Network::init(build_classifier(config.input_side), config.seed)?;
    let data = TrainData::new(set.inputs, targets)?;
    let train_config = TrainConfig::new(
        config.epochs,
        config.batch_size,
        config.learning_rate,
        crate::nn::Loss::SoftmaxCrossEntropy,
        config.seed,
    );
    let report = train_with(&mut net, &data, &train_config, on_epoch)?;
    Ok((net, report))
}

/// Evaluates the network on an already-loaded sample set.
pub fn evaluate_set<T: Scalar>(
    net: &Network<T>,
    set: &LabeledSet<T>,
) -> Result<EvalSummary, ClassifierError> {
    if net.output_shape() != [CLASS_COUNT] {
        return Err(ClassifierError::NotAClassifier {
            got: net.output_shape().to_vec(),
        });
    }
    let logits = predict_all(net, &set.inputs, 32)?;
    let mut confusion = [[0u64; CLASS_COUNT]; CLASS_COUNT];
    for (i, &truth) in set.labels.iter().enumerate() {
        let mut row = [T::zero(); CLASS_COUNT];
        row.copy_from_slice(logits.sample(i));
        let predicted = ClassifierOutput::from_logits(row).predicted;
        confusion[truth as usize][predicted.code() as usize] += 1;
    }
    Ok(EvalSummary::from_confusion(confusion))
}

/// Loads one manifest split at the network's input side and evaluates it.
pub fn evaluate<T: Scalar>(
    net: &Network<T>,
    manifest: &DatasetManifest,
    split: Split,
) -> Result<EvalSummary, ClassifierError> {
    let set = load_samples::<T>(manifest, split, input_side(net))?;
    evaluate_set(net, &set)
}

/// Convenience wrapper: evaluate straight from a checkpoint file.
pub fn evaluate_checkpoint<T: Scalar>(
    checkpoint: &Path,
    manifest: &DatasetManifest,
    split: Split,
) -> Result<EvalSummary, ClassifierError> {
    let (net, _meta) = crate::nn::load_checkpoint::<T>(checkpoint)?;
    evaluate(&net, manifest, split)
}

/// Parameter count of the standard architecture (input-size independent).
pub fn classifier_param_count() -> u64 {
    count_params(&build_classifier(32)).expect("classifier graph is well formed")
}
