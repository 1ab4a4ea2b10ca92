//! Degradation-aware underwater image enhancement.
//!
//! The crate implements a complete classify-then-enhance loop for underwater
//! imagery, organized in layers:
//!
//! - [`image`]: float image containers, color conversions, convolution,
//!   Sobel edges, block partitioning, and PNG/PPM I/O.
//! - [`degrade`]: eight parameterized synthetic degradations with severity
//!   tiers, plus a reproducible dataset builder that pairs each reference
//!   image with its degraded variants.
//! - [`metrics`]: full-reference and no-reference image quality metrics
//!   (PSNR/SSIM through UIQM/UCIQE and friends) with report writers.
//! - [`nn`]: a small deterministic neural engine — named-edge DAGs of dense
//!   and convolutional layers, Adam training, and binary checkpoints.
//! - [`classifier`]: the 9-way dominant-degradation classifier.
//! - [`enhance`]: the per-degradation enhancement networks and the routing
//!   table from predicted class to network.
//! - [`pipeline`]: the iterative enhancement loop with traces, batch runs,
//!   and regression scanning.
//! - [`synth`]: a procedural reference-image generator used by tests and
//!   smoke configurations.
//!
//! All numeric types are generic over a [`scalar::Scalar`] (`f32` or `f64`);
//! the aliases below fix the two widths used in practice: `f32` for training
//! and inference, `f64` for metric evaluation.

pub mod classifier;
pub mod degrade;
pub mod enhance;
pub mod image;
pub mod metrics;
pub mod nn;
pub mod pipeline;
pub mod rng;
pub mod scalar;
pub mod synth;

pub use crate::image::{ImageF, LabImage, Plane};
pub use crate::scalar::Scalar;

/// Working image type for training and inference.
pub type ImageF32 = ImageF<f32>;
/// High-precision image type for metric evaluation.
pub type ImageF64 = ImageF<f64>;
/// Working tensor type for training and inference.
pub type TensorF32 = nn::Tensor<f32>;
/// High-precision tensor type for gradient checking.
pub type TensorF64 = nn::Tensor<f64>;
/// Working network type for training and inference.
pub type NetworkF32 = nn::Network<f32>;

