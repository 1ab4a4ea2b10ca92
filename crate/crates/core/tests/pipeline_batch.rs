//! Batch-loop behavior against real files: deterministic reports, per-item
//! failure tolerance, and proportion bookkeeping.

use std::collections::BTreeMap;
use std::path::PathBuf;

use aquaforge::degrade::{degrade_noise, DatasetManifest, DegradationClass, ManifestRow};
use aquaforge::image::io::{load_png, save_png};
use aquaforge::image::ImageF;
use aquaforge::pipeline::{
    run_batch, Classify, Enhance, MetricsMode, PipelineConfig, PipelineError, StopReason,
};
use aquaforge::rng::derive_key;
use aquaforge::synth::synth_reference;

/// Calls everything noisy so the loop always runs its full budget.
struct AlwaysNoisy;

impl Classify<f32> for AlwaysNoisy {
    fn classify(&self, _img: &ImageF<f32>) -> Result<(DegradationClass, f64), PipelineError> {
        Ok((DegradationClass::Noisy, 0.75))
    }
}

/// Identity enhancer: output equals input.
struct PassThrough;

impl Enhance<f32> for PassThrough {
    fn enhance(
        &self,
        _class: DegradationClass,
        img: &ImageF<f32>,
    ) -> Result<ImageF<f32>, PipelineError> {
        Ok(img.clone())
    }
}

fn row(id: &str, reference: &str, degraded: &str, class: DegradationClass) -> ManifestRow {
    ManifestRow {
        id: id.to_string(),
        reference_path: PathBuf::from(reference),
        degraded_path: PathBuf::from(degraded),
        class_code: class.code(),
        tier: None,
        params: BTreeMap::new(),
        seed: 0,
    }
}

#[test]
fn batch_reports_are_deterministic_and_tolerate_bad_rows() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();

    let mut rows = Vec::new();
    for i in 0..3u64 {
        let reference = synth_reference::<f32>(16, derive_key(0xBA7C4, &[i]));
        let ref_name = format!("ref_{i}.png");
        save_png(&reference, &root.join(&ref_name)).unwrap();
        let noisy = degrade_noise(&reference, 0.10, derive_key(0xBA7C4, &[100 + i])).unwrap();
        let deg_name = format!("ref_{i}__noisy.png");
        save_png(&noisy, &root.join(&deg_name)).unwrap();
        rows.push(row(
            &format!("ref_{i}__noisy_b"),
            &ref_name,
            &deg_name,
            DegradationClass::Noisy,
        ));
    }
    // A clean row (input is the reference itself) and a broken row.
    rows.push(row("ref_0", "ref_0.png", "ref_0.png", DegradationClass::NoDegradation));
    rows.push(row(
        "ref_9__noisy_b",
        "ref_9.png",
        "missing.png",
        DegradationClass::Noisy,
    ));
    let manifest = DatasetManifest {
        rows,
        root: root.to_path_buf(),
    };

    let config = PipelineConfig {
        max_iterations: 3,
        metrics: MetricsMode::Full,
    };
    let report_a = root.join("report_a.json");
    let report_b = root.join("report_b.json");
    let a = run_batch(
        &AlwaysNoisy,
        &PassThrough,
        &config,
        &manifest,
        None,
        16,
        Some(&report_a),
    )
    .unwrap();
    let b = run_batch(
        &AlwaysNoisy,
        &PassThrough,
        &config,
        &manifest,
        None,
        16,
        Some(&report_b),
    )
    .unwrap();

    let bytes_a = std::fs::read(&report_a).unwrap();
    let bytes_b = std::fs::read(&report_b).unwrap();
    assert_eq!(bytes_a, bytes_b, "re-runs must produce identical reports");

    assert_eq!(a.images.len(), 4);
    assert_eq!(a.failures.len(), 1);
    assert_eq!(a.failures[0].id, "ref_9__noisy_b");

    for proportions in &a.proportions {
        let sum: f64 = proportions.percent.iter().sum();
        assert!((sum - 100.0).abs() < 0.1, "row sums to {sum}");
        // Everything classifies noisy, including the clean row's input.
        assert_eq!(proportions.percent[DegradationClass::Noisy.code() as usize], 100.0);
    }

    for image in &a.images {
        assert_eq!(image.stop, StopReason::MaxIterations);
        assert_eq!(image.iterations, 3);
        assert!(image.input_psnr.is_some());
        // The pass-through enhancer never changes the image.
        assert_eq!(image.final_psnr, image.input_psnr);
    }
    assert_eq!(b.images.len(), a.images.len());

    // PNG round trip sanity for the fixture itself.
    let back = load_png::<f32>(&root.join("ref_0.png")).unwrap();
    assert_eq!((back.height(), back.width()), (16, 16));
}
