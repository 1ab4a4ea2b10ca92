//! Colourfulness and combined quality scores: UICM, the combined UIQM, and
//! the Lab-based UCIQE.

use super::{channel8, MetricError};
use crate::image::color::rgb_to_lab;
use crate::image::{ImageError, ImageF};
use crate::scalar::Scalar;

/// Trimmed mean and full-population variance of one opponent-colour plane.
///
/// The mean drops the lowest and highest `floor(0.1·N)` samples; the
/// variance is taken over all `N` samples relative to that trimmed mean.
fn trimmed_stats<T: Scalar>(values: &mut Vec<T>) -> (T, T) {
    values.sort_by(|a, b| a.partial_cmp(b).expect("opponent values are finite"));
    let n = values.len();
    let trim = n / 10;
    let kept = &values[trim..n - trim];
    let mut mean = T::zero();
    for &v in kept {
        mean += v;
    }
    mean /= T::of_usize(kept.len());
    let mut var = T::zero();
    for &v in values.iter() {
        let d = v - mean;
        var += d * d;
    }
    var /= T::of_usize(n);
    (mean, var)
}

/// Underwater image colourfulness measure on the 8-bit opponent planes
/// `RG = R−G` and `YB = (R+G)/2 − B`, combining asymmetrically trimmed
/// means and full-population variances:
/// `−0.2868·√(μ_RG²+μ_YB²) + 0.1586·√(σ_RG²+σ_YB²)` — a neutral gray image
/// scores exactly zero.
pub fn uicm<T: Scalar>(img: &ImageF<T>) -> Result<T, MetricError> {
    if img.channels() != 3 {
        return Err(MetricError::Image(ImageError::WrongChannelCount {
            expected: 3,
            got: img.channels(),
        }));
    }
    let r = channel8(img, 0);
    let g = channel8(img, 1);
    let b = channel8(img, 2);
    let n = r.height * r.width;
    let mut rg = Vec::with_capacity(n);
    let mut yb = Vec::with_capacity(n);
    let half = T::of(0.5);
    for i in 0..n {
        let (rv, gv, bv) = (r.data[i], g.data[i], b.data[i]);
        rg.push(rv - gv);
        yb.push(half * (rv + gv) - bv);
    }
    let (mu_rg, var_rg) = trimmed_stats(&mut rg);
    let (mu_yb, var_yb) = trimmed_stats(&mut yb);
    let mu = (mu_rg * mu_rg + mu_yb * mu_yb).sqrt();
    let sigma = (var_rg + var_yb).sqrt();
    Ok(T::of(-0.2868) * mu + T::of(0.1586) * sigma)
}

/// Weighted combination of colourfulness, sharpness, and contrast:
/// `0.0282·UICM + 0.2953·UISM + 3.5753·UIConM`.
pub fn uiqm<T: Scalar>(img: &ImageF<T>) -> Result<T, MetricError> {
    let c = uicm(img)?;
    let s = super::blockwise::uism(img)?;
    let m = super::blockwise::uiconm(img)?;
    Ok(uiqm_from_parts(c, s, m))
}

/// [`uiqm`] from already-computed component scores.
pub(super) fn uiqm_from_parts<T: Scalar>(uicm: T, uism: T, uiconm: T) -> T {
    T::of(0.0282) * uicm + T::of(0.2953) * uism + T::of(3.5753) * uiconm
}

/// Linear-interpolation percentile of a sorted slice at rank `q·(n−1)`.
fn percentile_sorted<T: Scalar>(sorted: &[T], q: f64) -> T {
    let n = sorted.len();
    let rank = q * (n - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = T::of(rank - lo as f64);
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Underwater colour image quality evaluation on CIELAB:
/// `0.4680·σ_chroma + 0.2745·(P99(L)−P1(L))/100 + 0.2576·mean(chroma/(L+1e-6))`
/// with population standard deviation of chroma `√(a²+b²)` and
/// linear-interpolation percentiles of lightness. Works directly on the
/// unit-range samples (no 8-bit quantization).
pub fn uciqe<T: Scalar>(img: &ImageF<T>) -> Result<T, MetricError> {
    let lab = rgb_to_lab(img)?;
    let n = lab.height * lab.width;
    let mut lightness = Vec::with_capacity(n);
    let mut chroma = Vec::with_capacity(n);
    let mut sat_sum = T::zero();
    let eps = T::of(1e-6);
    for y in 0..lab.height {
        for x in 0..lab.width {
            let (l, a, b) = lab.lab(y, x);
            let c = (a * a + b * b).sqrt();
            lightness.push(l);
            chroma.push(c);
            sat_sum += c / (l + eps);
        }
    }
    let count = T::of_usize(n);
    let mut mean_c = T::zero();
    for &c in &chroma {
        mean_c += c;
    }
    mean_c /= count;
    let mut var_c = T::zero();
    for &c in &chroma {
        let d = c - mean_c;
        var_c += d * d;
    }
    var_c /= count;
    lightness.sort_by(|a, b| a.partial_cmp(b).expect("lightness values are finite"));
    let spread = percentile_sorted(&lightness, 0.99) - percentile_sorted(&lightness, 0.01);
    Ok(T::of(0.4680) * var_c.sqrt()
        + T::of(0.2745) * spread / T::of(100.0)
        + T::of(0.2576) * sat_sum / count)
}
