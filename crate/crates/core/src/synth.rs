//! Procedural reference images: a two-colour gradient background, a single
//! soft stripe wave, and sparse speckle clusters. Every image is a sample
//! from a low-dimensional parametric family (roughly a dozen numbers), so
//! compact models can actually learn to reproduce the clean scenes, while
//! the waves and speckle give blurring and noise something visible to
//! destroy. Deterministic per key, so corpora rebuild bit-identically; used
//! by tests and smoke configurations in place of a photographic dataset.

use crate::image::io::save_png;
use crate::image::{ImageError, ImageF};
use crate::rng::{derive_key, KeyedRng};
use crate::scalar::Scalar;
use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

/// How hard the plane waves are driven into saturation. Values around 2–3
/// turn a sine into wide flat bands joined by short steep transitions.
const WAVE_STEEPNESS: f64 = 2.5;

/// One soft-clipped plane wave mixed into all three channels.
struct Wave {
    ky: f64,
    kx: f64,
    phase: f64,
    amp: f64,
}

impl Wave {
    fn at(&self, y: f64, x: f64) -> f64 {
        let s = (self.ky * y + self.kx * x + self.phase).sin();
        self.amp * (WAVE_STEEPNESS * s).clamp(-1.0, 1.0)
    }
}

/// Generates one square reference image for a key.
///
/// The scene is a linear two-colour gradient along a random direction plus
/// one soft-clipped plane wave with a wavelength of roughly a dozen pixels:
/// wide flat bands joined by short steep transitions, like soft stripes.
/// The flat bands quantize to constant levels, the transitions carry
/// energy that smoothing visibly removes, so blur leaves a signature that
/// classifiers and restoration models can work with. Sparse speckle
/// clusters add impulsive detail whose strong local maxima blurring knocks
/// down. Samples stay inside `[0.01, 0.99]` so later degradations rarely
/// saturate.
pub fn synth_reference<T: Scalar>(side: usize, key: u64) -> ImageF<T> {
    assert!(side >= 8, "reference images must be at least 8x8");
    let mut rng = KeyedRng::new(key);
    let c0: [f64; 3] = std::array::from_fn(|_| rng.uniform_in(0.15, 0.85));
    // The far gradient colour sits at least 0.25 away per channel (reflected
    // back into range), so every image ramps through a wide band of levels.
    let c1: [f64; 3] = std::array::from_fn(|c| {
        let offset = rng.uniform_in(0.25, 0.55);
        let raw = if rng.below(2) == 1 { c0[c] + offset } else { c0[c] - offset };
        if raw > 0.97 {
            1.94 - raw
        } else if raw < 0.03 {
            0.06 - raw
        } else {
            raw
        }
    });
    let angle = rng.uniform_in(0.0, TAU);
    let (dir_y, dir_x) = (angle.sin(), angle.cos());
    let extent = side as f64;

    // Stripe orientation comes from four fixed buckets, and the spatial
    // frequency and amplitude are shared by every image, rather than
    // sampling continua: small decoders have to devote output basis
    // patterns to each distinct stripe geometry they can render, and a
    // handful of geometries keeps the whole family within reach of narrow
    // models. Phase stays continuous, so images never repeat.
    let wave = {
        let orient = f64::from(rng.below(4) as u32) * (TAU / 8.0);
        let omega = 0.48;
        Wave {
            ky: orient.sin() * omega,
            kx: orient.cos() * omega,
            phase: rng.uniform_in(0.0, TAU),
            amp: 0.13,
        }
    };

    // Sparse speckle: small bright/dark 2×2 clusters over otherwise smooth
    // regions. The clusters supply strong local maxima that blurring knocks
    // down; their amplitude is kept small so they carry little of the image
    // energy and restoration quality is not dominated by detail no compact
    // model could reproduce.
    let mut speckle = vec![0.0f64; side * side];
    let dots = ((side * side) as f64 * rng.uniform_in(0.008, 0.018)) as usize;
    for _ in 0..dots.max(3) {
        let dy = rng.below(side.saturating_sub(1).max(1));
        let dx = rng.below(side.saturating_sub(1).max(1));
        let delta = if rng.below(2) == 1 { 1.0 } else { -1.0 } * rng.uniform_in(0.06, 0.12);
        for oy in 0..2 {
            for ox in 0..2 {
                speckle[(dy + oy).min(side - 1) * side + (dx + ox).min(side - 1)] = delta;
            }
        }
    }

    // Projection of the corner-to-corner diagonal onto the gradient
    // direction, used to normalize positions into [0, 1].
    let span = (dir_y.abs() + dir_x.abs()) * extent;
    ImageF::from_fn(side, side, 3, |y, x, c| {
        let (yf, xf) = (y as f64, x as f64);
        let mut v = {
            let proj = dir_y * yf + dir_x * xf;
            let t = (proj / span + 0.5).clamp(0.0, 1.0);
            c0[c] + (c1[c] - c0[c]) * t
        };
        v += wave.at(yf, xf);
        v += speckle[y * side + x];
        T::of(v.clamp(0.01, 0.99))
    })
    .expect("generated samples are clamped into range")
}

/// Writes `count` reference images (`ref_0000.png`, `ref_0001.png`, …) into
/// `dir` and returns their paths in name order. Each image derives its own
/// key from the master seed, so corpora are reproducible and images are
/// mutually independent.
pub fn synth_corpus(
    dir: &Path,
    count: usize,
    side: usize,
    master_seed: u64,
) -> Result<Vec<PathBuf>, ImageError> {
    std::fs::create_dir_all(dir).map_err(|source| ImageError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut paths = Vec::with_capacity(count);
    for i in 0..count {
        let key = derive_key(master_seed, &[i as u64]);
        let img = synth_reference::<f32>(side, key);
        let path = dir.join(format!("ref_{i:04}.png"));
        save_png(&img, &path)?;
        paths.push(path);
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::io::load_png;
    use crate::metrics;

    #[test]
    fn generation_is_deterministic_per_key() {
        let a = synth_reference::<f64>(32, 7);
        let b = synth_reference::<f64>(32, 7);
        assert_eq!(a.data(), b.data());
        let c = synth_reference::<f64>(32, 8);
        assert_ne!(a.data(), c.data());
    }

    #[test]
    fn images_are_textured_not_degenerate() {
        for key in 0..10 {
            let img = synth_reference::<f64>(32, key);
            let nr = metrics::nr_summary(&img).unwrap();
            assert!(nr.entropy > 3.0, "key {key}: entropy {}", nr.entropy);
            assert!(nr.eme > 0.5, "key {key}: eme {}", nr.eme);
            assert!(nr.uism > 0.0, "key {key}: uism {}", nr.uism);
        }
    }

    #[test]
    fn corpus_round_trips_through_png() {
        let dir = tempfile::tempdir().unwrap();
        let paths = synth_corpus(dir.path(), 4, 16, 99).unwrap();
        assert_eq!(paths.len(), 4);
        assert_eq!(paths[0].file_name().unwrap(), "ref_0000.png");
        for path in &paths {
            let img = load_png::<f32>(path).unwrap();
            assert_eq!((img.height(), img.width(), img.channels()), (16, 16, 3));
        }
    }
}
