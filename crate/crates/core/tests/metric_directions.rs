//! Directional sanity checks: known degradations must move the right
//! metrics the right way on a seeded procedural corpus, and no-reference
//! scores must not care about image orientation.

use aquaforge::degrade::{degrade_blur, degrade_noise, degrade_tint};
use aquaforge::image::ImageF;
use aquaforge::metrics as m;
use aquaforge::rng::derive_key;
use aquaforge::synth::synth_reference;

const CORPUS: usize = 50;
const SIDE: usize = 32;
const MASTER: u64 = 0xD1EC7;

fn corpus() -> Vec<ImageF<f64>> {
    (0..CORPUS as u64)
        .map(|i| synth_reference(SIDE, derive_key(MASTER, &[i])))
        .collect()
}

fn hflip(img: &ImageF<f64>) -> ImageF<f64> {
    let w = img.width();
    ImageF::from_fn(img.height(), w, img.channels(), |y, x, c| {
        img.get(y, w - 1 - x, c)
    })
    .unwrap()
}

#[test]
fn strong_noise_pushes_psnr_below_22db_everywhere() {
    for (i, reference) in corpus().iter().enumerate() {
        let noisy = degrade_noise(reference, 0.10, derive_key(MASTER, &[7, i as u64])).unwrap();
        let psnr = m::psnr(reference, &noisy).unwrap();
        assert!(psnr < 22.0, "image {i}: psnr {psnr}");
    }
}

#[test]
fn blur_lowers_sharpness_on_nearly_all_images() {
    let mut lowered = 0;
    for reference in &corpus() {
        let blurred = degrade_blur(reference, 3.0).unwrap();
        if m::uism(&blurred).unwrap() < m::uism(reference).unwrap() {
            lowered += 1;
        }
    }
    assert!(
        lowered * 100 >= CORPUS * 95,
        "blur lowered UISM on only {lowered}/{CORPUS} images"
    );
}

#[test]
fn tint_moves_colourfulness_on_nearly_all_images() {
    let mut moved = 0;
    for (i, reference) in corpus().iter().enumerate() {
        let tinted = degrade_tint(reference, i % 3, 0.5).unwrap();
        let delta = (m::uicm(&tinted).unwrap() - m::uicm(reference).unwrap()).abs();
        if delta > 1e-3 {
            moved += 1;
        }
    }
    assert!(
        moved * 100 >= CORPUS * 90,
        "tint moved UICM on only {moved}/{CORPUS} images"
    );
}

#[test]
fn no_reference_scores_ignore_horizontal_flips() {
    for (i, reference) in corpus().iter().take(10).enumerate() {
        let flipped = hflip(reference);
        let a = m::nr_summary(reference).unwrap();
        let b = m::nr_summary(&flipped).unwrap();
        for ((name, va), (_, vb)) in a.columns().into_iter().zip(b.columns()) {
            let tol = 1e-9 * va.abs().max(1.0);
            assert!(
                (va - vb).abs() <= tol,
                "image {i}: {name} changed under flip: {va} vs {vb}"
            );
        }
    }
}
