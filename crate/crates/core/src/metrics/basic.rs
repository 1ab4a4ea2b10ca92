//! Distortion and information metrics: MSE, PSNR, RMSE, entropy, SSIM.

use super::{gray8, MetricError};
use crate::image::{ImageError, ImageF};
use crate::scalar::Scalar;

/// Mean squared error in the 8-bit domain, averaged over every sample of
/// every channel.
pub fn mse<T: Scalar>(reference: &ImageF<T>, test: &ImageF<T>) -> Result<T, MetricError> {
    reference.check_same_shape(test)?;
    let mut acc = T::zero();
    for (&a, &b) in reference.data().iter().zip(test.data()) {
        let d = super::byte_level(a) - super::byte_level(b);
        acc += d * d;
    }
    Ok(acc / T::of_usize(reference.data().len()))
}

/// Peak signal-to-noise ratio in decibels against the 8-bit peak of 255.
/// Identical images (zero error) report the 100 dB cap instead of infinity.
pub fn psnr<T: Scalar>(reference: &ImageF<T>, test: &ImageF<T>) -> Result<T, MetricError> {
    let e = mse(reference, test)?;
    if e == T::zero() {
        return Ok(T::of(100.0));
    }
    let ratio = T::of(255.0) / e.sqrt();
    Ok(T::of(20.0) * ratio.log10())
}

/// Root mean squared error in the 8-bit domain.
pub fn rmse<T: Scalar>(reference: &ImageF<T>, test: &ImageF<T>) -> Result<T, MetricError> {
    Ok(mse(reference, test)?.sqrt())
}

/// Shannon entropy (bits) of the 8-bit luminance histogram; 0 for constant
/// images, at most 8 for a uniform histogram.
pub fn entropy<T: Scalar>(img: &ImageF<T>) -> T {
    let gray = gray8(img);
    let mut hist = [0usize; 256];
    for &v in &gray.data {
        hist[v.as_f64() as usize] += 1;
    }
    let n = T::of_usize(gray.data.len());
    let mut h = T::zero();
    for &count in hist.iter().filter(|&&c| c > 0) {
        let p = T::of_usize(count) / n;
        h -= p * p.log2();
    }
    h
}

const SSIM_WINDOW: usize = 8;

/// Structural similarity on 8-bit luminance: mean of the local SSIM index
/// over all 8×8 windows at stride 1, with the standard stabilizers
/// `C1 = (0.01·255)²` and `C2 = (0.03·255)²`. Windows use population
/// statistics (divide by 64). Errors if either side is smaller than 8.
pub fn ssim<T: Scalar>(reference: &ImageF<T>, test: &ImageF<T>) -> Result<T, MetricError> {
    reference.check_same_shape(test)?;
    let (h, w) = (reference.height(), reference.width());
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(MetricError::Image(ImageError::TooSmall {
            height: h,
            width: w,
            min: SSIM_WINDOW,
        }));
    }
    let x = gray8(reference);
    let y = gray8(test);
    let c1 = T::of(6.5025); // (0.01·255)²
    let c2 = T::of(58.5225); // (0.03·255)²
    let inv_n = T::one() / T::of_usize(SSIM_WINDOW * SSIM_WINDOW);

    let mut total = T::zero();
    let mut windows = 0usize;
    for wy in 0..=(h - SSIM_WINDOW) {
        for wx in 0..=(w - SSIM_WINDOW) {
            let mut sx = T::zero();
            let mut sy = T::zero();
            let mut sxx = T::zero();
            let mut syy = T::zero();
            let mut sxy = T::zero();
            for dy in 0..SSIM_WINDOW {
                for dx in 0..SSIM_WINDOW {
                    let a = x.get(wy + dy, wx + dx);
                    let b = y.get(wy + dy, wx + dx);
                    sx += a;
                    sy += b;
                    sxx += a * a;
                    syy += b * b;
                    sxy += a * b;
                }
            }
            let mx = sx * inv_n;
            let my = sy * inv_n;
            let vx = sxx * inv_n - mx * mx;
            let vy = syy * inv_n - my * my;
            let cov = sxy * inv_n - mx * my;
            let num = (T::of(2.0) * mx * my + c1) * (T::of(2.0) * cov + c2);
            let den = (mx * mx + my * my + c1) * (vx + vy + c2);
            total += num / den;
            windows += 1;
        }
    }
    Ok(total / T::of_usize(windows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::KeyedRng;

    fn textured(seed: u64) -> ImageF<f64> {
        let mut rng = KeyedRng::new(seed);
        ImageF::from_fn(12, 12, 3, |_, _, _| rng.uniform()).unwrap()
    }

    #[test]
    fn mse_identity_is_zero_and_offsets_square() {
        let img = textured(1);
        assert_eq!(mse(&img, &img).unwrap(), 0.0);

        let a = ImageF::<f64>::filled(4, 4, 3, 100.0 / 255.0).unwrap();
        let b = ImageF::<f64>::filled(4, 4, 3, 116.0 / 255.0).unwrap();
        assert_eq!(mse(&a, &b).unwrap(), 256.0);
    }

    #[test]
    fn mse_rejects_shape_mismatch() {
        let a = ImageF::<f64>::filled(4, 4, 3, 0.5).unwrap();
        let b = ImageF::<f64>::filled(4, 5, 3, 0.5).unwrap();
        assert!(mse(&a, &b).is_err());
    }

    #[test]
    fn psnr_cap_and_closed_form() {
        let img = textured(2);
        assert_eq!(psnr(&img, &img).unwrap(), 100.0);

        let a = ImageF::<f64>::filled(4, 4, 3, 100.0 / 255.0).unwrap();
        let b = ImageF::<f64>::filled(4, 4, 3, 116.0 / 255.0).unwrap();
        // MSE 256 → 20·log10(255/16).
        let want = 20.0 * (255.0f64 / 16.0).log10();
        assert!((psnr(&a, &b).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn rmse_is_sqrt_of_mse() {
        let a = textured(3);
        let b = textured(4);
        let m = mse(&a, &b).unwrap();
        let r = rmse(&a, &b).unwrap();
        assert!((r * r - m).abs() < 1e-9 * m.max(1.0));
        let c = ImageF::<f64>::filled(4, 4, 3, 100.0 / 255.0).unwrap();
        let d = ImageF::<f64>::filled(4, 4, 3, 116.0 / 255.0).unwrap();
        assert_eq!(rmse(&c, &d).unwrap(), 16.0);
    }

    #[test]
    fn entropy_hits_the_named_landmarks() {
        let flat = ImageF::<f64>::filled(8, 8, 1, 0.42).unwrap();
        assert_eq!(entropy(&flat), 0.0);

        let halves =
            ImageF::<f64>::from_fn(8, 8, 1, |y, _, _| if y < 4 { 0.0 } else { 1.0 }).unwrap();
        assert!((entropy(&halves) - 1.0f64).abs() < 1e-12);

        // All 256 levels equiprobable → exactly 8 bits.
        let uniform = ImageF::<f64>::from_fn(16, 16, 1, |y, x, _| {
            (y * 16 + x) as f64 / 255.0
        })
        .unwrap();
        assert!((entropy(&uniform) - 8.0f64).abs() < 1e-12);
    }

    #[test]
    fn ssim_identity_symmetry_and_closed_form() {
        let a = textured(5);
        assert!((ssim(&a, &a).unwrap() - 1.0f64).abs() < 1e-9);

        let b = textured(6);
        let ab = ssim(&a, &b).unwrap();
        let ba = ssim(&b, &a).unwrap();
        assert!((ab - ba).abs() < 1e-9);
        assert!((-1.0..=1.0).contains(&ab));

        // Constant 100 vs constant 200: variance terms vanish.
        let x = ImageF::<f64>::filled(8, 8, 3, 100.0 / 255.0).unwrap();
        let y = ImageF::<f64>::filled(8, 8, 3, 200.0 / 255.0).unwrap();
        let c1 = 6.5025;
        let want = (2.0 * 100.0 * 200.0 + c1) / (100.0f64 * 100.0 + 200.0 * 200.0 + c1);
        assert!((ssim(&x, &y).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn ssim_rejects_tiny_images() {
        let a = ImageF::<f64>::filled(7, 9, 3, 0.5).unwrap();
        assert!(matches!(
            ssim(&a, &a),
            Err(MetricError::Image(ImageError::TooSmall { .. }))
        ));
    }
}
