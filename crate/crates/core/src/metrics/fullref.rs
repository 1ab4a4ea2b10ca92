//! Auxiliary full-reference scores: colour-enhancement factor, contrast-to-
//! noise ratio, edge-based image-enhancement ratio, absolute mean brightness
//! error, average gradient, and the patch-based contrast-quality index.

use super::{channel8, gray8, stable_ratio, MetricError};
use crate::image::ops::block_partition;
use crate::image::{ImageF, Plane};
use crate::scalar::Scalar;

/// The seven auxiliary full-reference scores for one (reference, test) pair.
#[derive(Clone, Copy, Debug)]
pub struct FrAuxiliary<T> {
    /// Colour-enhancement factor: colourfulness of the test image over the
    /// reference's (identical pair → 1).
    pub cef: T,
    /// Contrast-to-noise ratio `(μ_ref − μ_test)/σ_test`, zero when the test
    /// image is flat.
    pub cnr: T,
    /// Image-enhancement metric: ratio of total within-tile neighbour
    /// contrast, test over reference (identical pair → 1).
    pub iem: T,
    /// Absolute mean brightness error in 8-bit units.
    pub ambe: T,
    /// Average gradient of the reference.
    pub ag_ref: T,
    /// Average gradient of the test image.
    pub ag_test: T,
    /// Patch-based contrast-quality index (identical pair → 1).
    pub pcqi: T,
}

/// Population mean and variance of a plane.
fn plane_stats<T: Scalar>(p: &Plane<T>) -> (T, T) {
    let n = T::of_usize(p.data.len());
    let mut mean = T::zero();
    for &v in &p.data {
        mean += v;
    }
    mean /= n;
    let mut var = T::zero();
    for &v in &p.data {
        let d = v - mean;
        var += d * d;
    }
    (mean, var / n)
}

/// Colourfulness in 8-bit opponent space: `√(σ_RG²+σ_YB²) + 0.3·√(μ_RG²+μ_YB²)`.
/// Grayscale images have zero opponent signal and score 0.
fn colourfulness<T: Scalar>(img: &ImageF<T>) -> T {
    if img.channels() != 3 {
        return T::zero();
    }
    let r = channel8(img, 0);
    let g = channel8(img, 1);
    let b = channel8(img, 2);
    let half = T::of(0.5);
    let rg = Plane::from_fn(r.height, r.width, |y, x| r.get(y, x) - g.get(y, x));
    let yb = Plane::from_fn(r.height, r.width, |y, x| {
        half * (r.get(y, x) + g.get(y, x)) - b.get(y, x)
    });
    let (mu_rg, var_rg) = plane_stats(&rg);
    let (mu_yb, var_yb) = plane_stats(&yb);
    (var_rg + var_yb).sqrt() + T::of(0.3) * (mu_rg * mu_rg + mu_yb * mu_yb).sqrt()
}

/// Total absolute difference between each pixel and its 8-connected
/// neighbours, counted within 8×8 tiles (pairs straddling a tile boundary do
/// not contribute).
fn tile_neighbour_contrast<T: Scalar>(plane: &Plane<T>) -> T {
    let mut total = T::zero();
    for block in block_partition(plane, 8, 8) {
        let tile = &block.plane;
        for y in 0..tile.height {
            for x in 0..tile.width {
                let centre = tile.get(y, x);
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        if dy == 0 && dx == 0 {
                            continue;
                        }
                        let (ny, nx) = (y as i64 + dy, x as i64 + dx);
                        if ny < 0 || nx < 0 || ny >= tile.height as i64 || nx >= tile.width as i64
                        {
                            continue;
                        }
                        total += (centre - tile.get(ny as usize, nx as usize)).abs();
                    }
                }
            }
        }
    }
    total
}

/// Average gradient with forward differences: mean of `√((∇x²+∇y²)/2)` over
/// the `(h−1)(w−1)` pixels that have both neighbours. Degenerate 1-pixel-wide
/// planes score 0.
fn average_gradient<T: Scalar>(p: &Plane<T>) -> T {
    if p.height < 2 || p.width < 2 {
        return T::zero();
    }
    let half = T::of(0.5);
    let mut total = T::zero();
    for y in 0..p.height - 1 {
        for x in 0..p.width - 1 {
            let v = p.get(y, x);
            let gx = p.get(y, x + 1) - v;
            let gy = p.get(y + 1, x) - v;
            total += ((gx * gx + gy * gy) * half).sqrt();
        }
    }
    total / T::of_usize((p.height - 1) * (p.width - 1))
}

/// Patch-based contrast-quality index over sliding square patches
/// (side `min(11, h, w)`, stride 1): the product of a contrast-gain term
/// `(4/π)·atan((σ12+C)/(σ1²+C))`, a structure term `(σ12+C)/(σ1σ2+C)`, and a
/// brightness term `exp(−|μ1−μ2|/L)` with C = 3 and L = 256, averaged over
/// patches. An identical pair scores 1.
fn pcqi<T: Scalar>(reference: &Plane<T>, test: &Plane<T>) -> T {
    let side = 11.min(reference.height).min(reference.width);
    let inv_n = T::one() / T::of_usize(side * side);
    let c = T::of(3.0);
    let big_l = T::of(256.0);
    let four_over_pi = T::of(4.0 / std::f64::consts::PI);
    let mut total = T::zero();
    let mut patches = 0usize;
    for y0 in 0..=reference.height - side {
        for x0 in 0..=reference.width - side {
            let (mut s1, mut s2, mut s11, mut s22, mut s12) =
                (T::zero(), T::zero(), T::zero(), T::zero(), T::zero());
            for y in y0..y0 + side {
                for x in x0..x0 + side {
                    let a = reference.get(y, x);
                    let b = test.get(y, x);
                    s1 += a;
                    s2 += b;
                    s11 += a * a;
                    s22 += b * b;
                    s12 += a * b;
                }
            }
            let mu1 = s1 * inv_n;
            let mu2 = s2 * inv_n;
            let var1 = (s11 * inv_n - mu1 * mu1).max(T::zero());
            let var2 = (s22 * inv_n - mu2 * mu2).max(T::zero());
            let cov = s12 * inv_n - mu1 * mu2;
            let gain = four_over_pi * ((cov + c) / (var1 + c)).atan();
            let structure = (cov + c) / (var1.sqrt() * var2.sqrt() + c);
            let brightness = (-(mu1 - mu2).abs() / big_l).exp();
            total += gain * structure * brightness;
            patches += 1;
        }
    }
    total / T::of_usize(patches)
}

/// Computes the seven auxiliary full-reference scores for a matched pair.
pub fn fr_auxiliary<T: Scalar>(
    reference: &ImageF<T>,
    test: &ImageF<T>,
) -> Result<FrAuxiliary<T>, MetricError> {
    reference.check_same_shape(test)?;
    let gray_ref = gray8(reference);
    let gray_test = gray8(test);

    let cef = stable_ratio(colourfulness(test), colourfulness(reference));

    let (mu_ref, _) = plane_stats(&gray_ref);
    let (mu_test, var_test) = plane_stats(&gray_test);
    let sigma_test = var_test.sqrt();
    let cnr = if sigma_test < T::of(1e-6) {
        T::zero()
    } else {
        (mu_ref - mu_test) / sigma_test
    };

    let iem = stable_ratio(
        tile_neighbour_contrast(&gray_test),
        tile_neighbour_contrast(&gray_ref),
    );

    Ok(FrAuxiliary {
        cef,
        cnr,
        iem,
        ambe: (mu_ref - mu_test).abs(),
        ag_ref: average_gradient(&gray_ref),
        ag_test: average_gradient(&gray_test),
        pcqi: pcqi(&gray_ref, &gray_test),
    })
}
