//! Color-space conversions: BT.601 luma and sRGB → CIELab (D65).

use super::{clamp01, ImageError, ImageF, LabImage};
use crate::scalar::Scalar;

/// BT.601 luma weights for (R, G, B).
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// Converts an RGB image to grayscale with BT.601 weights on the unit-range
/// floats. Errors if the input is not 3-channel.
pub fn to_gray<T: Scalar>(img: &ImageF<T>) -> Result<ImageF<T>, ImageError> {
    if img.channels() != 3 {
        return Err(ImageError::WrongChannelCount {
            expected: 3,
            got: img.channels(),
        });
    }
    let wr = T::of(LUMA_WEIGHTS[0]);
    let wg = T::of(LUMA_WEIGHTS[1]);
    let wb = T::of(LUMA_WEIGHTS[2]);
    ImageF::from_fn(img.height(), img.width(), 1, |y, x, _| {
        clamp01(wr * img.get(y, x, 0) + wg * img.get(y, x, 1) + wb * img.get(y, x, 2))
    })
}

/// The luminance plane of an image: identity for grayscale input, BT.601
/// conversion for RGB.
pub fn luminance<T: Scalar>(img: &ImageF<T>) -> Result<ImageF<T>, ImageError> {
    match img.channels() {
        1 => Ok(img.clone()),
        _ => to_gray(img),
    }
}

/// sRGB companding inverse: gamma-encoded value → linear-light value.
#[inline]
fn srgb_to_linear(c: f64) -> f64 {
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

/// CIE `f` function used by the Lab transform.
#[inline]
fn lab_f(t: f64) -> f64 {
    const DELTA: f64 = 6.0 / 29.0;
    if t > DELTA * DELTA * DELTA {
        t.cbrt()
    } else {
        t / (3.0 * DELTA * DELTA) + 4.0 / 29.0
    }
}

/// Converts an sRGB image (D65 white) to CIELab.
///
/// Uses the standard sRGB → XYZ matrix and reference white
/// `(0.95047, 1.0, 1.08883)`; pure white maps to `L = 100, a = b = 0` and
/// black to `L = 0`.
pub fn rgb_to_lab<T: Scalar>(img: &ImageF<T>) -> Result<LabImage<T>, ImageError> {
    if img.channels() != 3 {
        return Err(ImageError::WrongChannelCount {
            expected: 3,
            got: img.channels(),
        });
    }
    const XN: f64 = 0.95047;
    const YN: f64 = 1.0;
    const ZN: f64 = 1.08883;
    let mut data = Vec::with_capacity(img.height() * img.width() * 3);
    for y in 0..img.height() {
        for x in 0..img.width() {
            let r = srgb_to_linear(img.get(y, x, 0).as_f64());
            let g = srgb_to_linear(img.get(y, x, 1).as_f64());
            let b = srgb_to_linear(img.get(y, x, 2).as_f64());
            let xx = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
            let yy = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
            let zz = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
            let fx = lab_f(xx / XN);
            let fy = lab_f(yy / YN);
            let fz = lab_f(zz / ZN);
            data.push(T::of(116.0 * fy - 16.0));
            data.push(T::of(500.0 * (fx - fy)));
            data.push(T::of(200.0 * (fy - fz)));
        }
    }
    Ok(LabImage {
        height: img.height(),
        width: img.width(),
        data,
    })
}
