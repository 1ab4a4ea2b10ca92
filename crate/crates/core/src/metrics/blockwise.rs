//! Block-contrast metrics: EME, EMEE, the Sobel-based sharpness score UISM,
//! and the PLIP-based contrast score UIConM. All operate on 8×8 tiles
//! (ragged edge tiles included) in the 8-bit domain.

use super::{channel8, gray8, plane8, MetricError};
use crate::image::ops::{block_partition, sobel_gradients};
use crate::image::{ImageError, ImageF, Plane};
use crate::scalar::Scalar;

const BLOCK: usize = 8;

/// Per-block extrema over the standard 8×8 tiling.
fn block_min_max<T: Scalar>(plane: &Plane<T>) -> Vec<(T, T)> {
    block_partition(plane, BLOCK, BLOCK)
        .into_iter()
        .map(|b| (b.plane.min(), b.plane.max()))
        .collect()
}

/// Measure of enhancement: block mean of `20·log10((max+1)/(min+1))` on the
/// quantized plane. The +1 (one 8-bit unit) guards empty dark blocks; a
/// constant image scores exactly zero.
pub fn eme<T: Scalar>(plane: &Plane<T>) -> T {
    eme_quantized(&plane8(plane))
}

/// [`eme`] for planes already holding 8-bit levels.
pub(super) fn eme_quantized<T: Scalar>(plane: &Plane<T>) -> T {
    let blocks = block_min_max(plane);
    let one = T::one();
    let mut total = T::zero();
    for &(lo, hi) in &blocks {
        total += T::of(20.0) * ((hi + one) / (lo + one)).log10();
    }
    total / T::of_usize(blocks.len())
}

/// Entropic measure of enhancement: block mean of `α·r^α·ln r` with
/// `r = (max+1)/(min+1)` on the quantized plane.
pub fn emee<T: Scalar>(plane: &Plane<T>, alpha: T) -> T {
    emee_quantized(&plane8(plane), alpha)
}

/// [`emee`] for planes already holding 8-bit levels.
pub(super) fn emee_quantized<T: Scalar>(plane: &Plane<T>, alpha: T) -> T {
    let blocks = block_min_max(plane);
    let one = T::one();
    let mut total = T::zero();
    for &(lo, hi) in &blocks {
        let r = (hi + one) / (lo + one);
        total += alpha * r.powf(alpha) * r.ln();
    }
    total / T::of_usize(blocks.len())
}

/// The natural-log block-contrast form used inside [`uism`]: block mean of
/// `ln((max+1)/(min+1))` scaled by 2. Operates on raw non-negative planes
/// (edge-strength products are not 8-bit quantities).
fn log_block_contrast<T: Scalar>(plane: &Plane<T>) -> T {
    let blocks = block_min_max(plane);
    let one = T::one();
    let mut total = T::zero();
    for &(lo, hi) in &blocks {
        total += ((hi + one) / (lo + one)).ln();
    }
    T::of(2.0) * total / T::of_usize(blocks.len())
}

/// Underwater image sharpness measure: for each RGB channel, the Sobel
/// gradient magnitude of the 8-bit channel multiplies the channel itself,
/// and the product plane is scored with the natural-log block-contrast
/// form; the three scores combine with the luminance weights
/// (0.299, 0.587, 0.114).
pub fn uism<T: Scalar>(img: &ImageF<T>) -> Result<T, MetricError> {
    if img.channels() != 3 {
        return Err(MetricError::Image(ImageError::WrongChannelCount {
            expected: 3,
            got: img.channels(),
        }));
    }
    let weights = [T::of(0.299), T::of(0.587), T::of(0.114)];
    let mut total = T::zero();
    for (c, &lambda) in weights.iter().enumerate() {
        let chan = channel8(img, c);
        let (gx, gy) = sobel_gradients(&chan);
        let product = Plane::from_fn(chan.height, chan.width, |y, x| {
            let px = gx.get(y, x);
            let py = gy.get(y, x);
            (px * px + py * py).sqrt() * chan.get(y, x)
        });
        total += lambda * log_block_contrast(&product);
    }
    Ok(total)
}

/// PLIP parameter for the UIConM operators, in 8-bit units.
const PLIP_GAMMA: f64 = 1026.0;

/// Underwater image contrast measure on 8-bit luminance: per 8×8 block,
/// the PLIP Michelson ratio `w = (max⊖min)/(max⊕min)` with
/// `a⊖b = γ(a−b)/(γ−b)` and `a⊕b = a+b−ab/γ` (γ = 1026) contributes
/// `−w·ln w`, and the block mean is scaled by 2. Blocks with `max⊕min = 0`
/// (all-black) and blocks with `w = 0` (constant) contribute zero, so a
/// constant image scores exactly zero and higher-contrast blocks score
/// higher.
pub fn uiconm<T: Scalar>(img: &ImageF<T>) -> Result<T, MetricError> {
    if img.channels() != 3 {
        return Err(MetricError::Image(ImageError::WrongChannelCount {
            expected: 3,
            got: img.channels(),
        }));
    }
    let gray = gray8(img);
    let gamma = T::of(PLIP_GAMMA);
    let blocks = block_min_max(&gray);
    let mut total = T::zero();
    for &(lo, hi) in &blocks {
        let minus = gamma * (hi - lo) / (gamma - lo);
        let plus = hi + lo - hi * lo / gamma;
        if plus == T::zero() {
            continue;
        }
        let w = minus / plus;
        if w > T::zero() {
            total -= w * w.ln();
        }
    }
    Ok(T::of(2.0) * total / T::of_usize(blocks.len()))
}
