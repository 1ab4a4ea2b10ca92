//! Image quality metrics: full-reference (needs the clean image) and
//! no-reference (scores a lone image).
//!
//! Every metric whose constants assume the classic 0–255 domain quantizes
//! its inputs to 8-bit levels first (round half away from zero), so scores
//! line up with the values practitioners expect from byte images. The Lab
//! based UCIQE is the exception: it converts the original unit-range samples.
//!
//! Conventions shared across the suite:
//!
//! - blocks are 8×8 tiles in row-major order, ragged right/bottom edges
//!   included unless a metric needs complete blocks (the spectral features);
//! - log-ratio contrast terms guard zero denominators by adding one 8-bit
//!   unit to numerator and denominator;
//! - ratio-of-totals metrics stabilize the quotient with a 1e-9 offset on
//!   both sides so identical pairs score exactly 1 and empty signals do not
//!   divide by zero.

mod basic;
mod blockwise;
mod color;
mod fullref;
mod report;
mod sseq;

pub use basic::{entropy, mse, psnr, rmse, ssim};
pub use blockwise::{eme, emee, uiconm, uism};
pub use color::{uciqe, uicm, uiqm};
pub use fullref::{fr_auxiliary, FrAuxiliary};
pub use report::{format_sig6, write_csv, write_jsonl, MetricReport};
pub use sseq::{sseq_features, SseqFeatures};

use crate::image::color::luminance;
use crate::image::{ImageError, ImageF, Plane};
use crate::scalar::Scalar;
use thiserror::Error;

/// Errors from metric evaluation.
#[derive(Debug, Error)]
pub enum MetricError {
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error("{metric} produced a non-finite value")]
    NotFinite { metric: &'static str },
    #[error("report column `{0}` already present")]
    DuplicateColumn(String),
    #[error("report i/o failure: {0}")]
    Io(#[from] std::io::Error),
}

/// Quantizes a unit-range sample to its 8-bit level (0–255, round half away
/// from zero), returned in the working float type.
pub(crate) fn byte_level<T: Scalar>(v: T) -> T {
    let scaled = v.max(T::zero()).min(T::one()) * T::of(255.0);
    (scaled + T::of(0.5)).floor().min(T::of(255.0))
}

/// 8-bit luminance plane of an image (integer-valued floats 0–255).
pub(crate) fn gray8<T: Scalar>(img: &ImageF<T>) -> Plane<T> {
    let lum = luminance(img).expect("container guarantees 1 or 3 channels");
    Plane::from_fn(lum.height(), lum.width(), |y, x| byte_level(lum.get(y, x, 0)))
}

/// One 8-bit channel plane of an image.
pub(crate) fn channel8<T: Scalar>(img: &ImageF<T>, c: usize) -> Plane<T> {
    Plane::from_fn(img.height(), img.width(), |y, x| byte_level(img.get(y, x, c)))
}

/// Quantizes an arbitrary plane (clamping into the unit range first).
pub(crate) fn plane8<T: Scalar>(p: &Plane<T>) -> Plane<T> {
    Plane::from_fn(p.height, p.width, |y, x| byte_level(p.get(y, x)))
}

/// Stabilized ratio used by the enhancement-effect metrics: identical totals
/// give exactly one, and zero-over-zero is defined as one.
pub(crate) fn stable_ratio<T: Scalar>(num: T, den: T) -> T {
    let eps = T::of(1e-9);
    (num + eps) / (den + eps)
}

/// Convenience bundle of every no-reference score for one image.
#[derive(Clone, Debug)]
pub struct NrSummary<T> {
    pub entropy: T,
    pub eme: T,
    pub emee: T,
    pub uicm: T,
    pub uism: T,
    pub uiconm: T,
    pub uiqm: T,
    pub uciqe: T,
    pub spatial_entropy: T,
    pub spectral_entropy: T,
}

/// Computes the full no-reference suite on a 3-channel image.
pub fn nr_summary<T: Scalar>(img: &ImageF<T>) -> Result<NrSummary<T>, MetricError> {
    let gray = gray8(img);
    let sseq = sseq_features(img);
    let uicm_v = uicm(img)?;
    let uism_v = uism(img)?;
    let uiconm_v = uiconm(img)?;
    Ok(NrSummary {
        entropy: entropy(img),
        eme: blockwise::eme_quantized(&gray),
        emee: blockwise::emee_quantized(&gray, T::of(0.2)),
        uicm: uicm_v,
        uism: uism_v,
        uiconm: uiconm_v,
        uiqm: color::uiqm_from_parts(uicm_v, uism_v, uiconm_v),
        uciqe: uciqe(img)?,
        spatial_entropy: sseq.spatial_entropy,
        spectral_entropy: sseq.spectral_entropy,
    })
}

impl<T: Scalar> NrSummary<T> {
    /// Flattens into `(name, value)` pairs in report column order.
    pub fn columns(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("entropy", self.entropy.as_f64()),
            ("eme", self.eme.as_f64()),
            ("emee", self.emee.as_f64()),
            ("uicm", self.uicm.as_f64()),
            ("uism", self.uism.as_f64()),
            ("uiconm", self.uiconm.as_f64()),
            ("uiqm", self.uiqm.as_f64()),
            ("uciqe", self.uciqe.as_f64()),
            ("spatial_entropy", self.spatial_entropy.as_f64()),
            ("spectral_entropy", self.spectral_entropy.as_f64()),
        ]
    }
}

/// Convenience bundle of every full-reference score for one pair.
#[derive(Clone, Debug)]
pub struct FrSummary<T> {
    pub mse: T,
    pub psnr: T,
    pub rmse: T,
    pub ssim: T,
    pub aux: FrAuxiliary<T>,
}

/// Computes the full full-reference suite on a matched pair.
pub fn fr_summary<T: Scalar>(
    reference: &ImageF<T>,
    test: &ImageF<T>,
) -> Result<FrSummary<T>, MetricError> {
    Ok(FrSummary {
        mse: mse(reference, test)?,
        psnr: psnr(reference, test)?,
        rmse: rmse(reference, test)?,
        ssim: ssim(reference, test)?,
        aux: fr_auxiliary(reference, test)?,
    })
}

impl<T: Scalar> FrSummary<T> {
    /// Flattens into `(name, value)` pairs in report column order.
    pub fn columns(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("mse", self.mse.as_f64()),
            ("psnr", self.psnr.as_f64()),
            ("rmse", self.rmse.as_f64()),
            ("ssim", self.ssim.as_f64()),
            ("cef", self.aux.cef.as_f64()),
            ("cnr", self.aux.cnr.as_f64()),
            ("iem", self.aux.iem.as_f64()),
            ("ambe", self.aux.ambe.as_f64()),
            ("ag_ref", self.aux.ag_ref.as_f64()),
            ("ag_test", self.aux.ag_test.as_f64()),
            ("pcqi", self.aux.pcqi.as_f64()),
        ]
    }
}
