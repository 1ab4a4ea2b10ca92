//! Temporary diagnostic (deleted before commit): find which corpus images
//! flip the blur/UISM direction and report their parameters.

use aquaforge::degrade::{build_dataset, degrade_blur, SeverityTier, Split};
use aquaforge::enhance::{enhance_image, train_enhancer, EnhancerId, EnhancerTrainConfig};
use aquaforge::image::io::load_png;
use aquaforge::metrics as m;
use aquaforge::rng::derive_key;
use aquaforge::synth::{synth_corpus, synth_reference};

#[test]
fn probe_enhancer_gains() {
    let refs_count: usize = std::env::var("PROBE_REFS").ok().and_then(|v| v.parse().ok()).unwrap_or(80);
    let epochs: usize = std::env::var("PROBE_EPOCHS").ok().and_then(|v| v.parse().ok()).unwrap_or(30);
    let lr: f64 = std::env::var("PROBE_LR").ok().and_then(|v| v.parse().ok()).unwrap_or(1e-3);
    let only: Option<String> = std::env::var("PROBE_ONLY").ok();
    println!("refs {refs_count} epochs {epochs} lr {lr}");

    let dir = tempfile::tempdir().unwrap();
    let refs = dir.path().join("refs");
    let out = dir.path().join("data");
    synth_corpus(&refs, refs_count, 32, 0xFEED).unwrap();
    let manifest = build_dataset::<f32>(&refs, &out, &SeverityTier::ALL, 11).unwrap();

    for id in [
        EnhancerId::Dn,
        EnhancerId::Ic,
        EnhancerId::Db,
        EnhancerId::Dhce,
        EnhancerId::CbR,
    ] {
        if let Some(o) = &only {
            if id.name() != o {
                continue;
            }
        }
        let t0 = std::time::Instant::now();
        let config = EnhancerTrainConfig {
            epochs,
            learning_rate: lr,
            ..EnhancerTrainConfig::default()
        };
        let (net, report) = train_enhancer::<f32>(&manifest, id, &config, |e, l| {
            if e % 100 == 0 || e + 1 == epochs {
                println!("  epoch {e}: loss {l:.6}");
            }
        })
        .unwrap();
        let mut befores: Vec<f64> = Vec::new();
        let mut afters: Vec<f64> = Vec::new();
        for row in manifest.rows_in_split(Split::Test) {
            if !id.serves().iter().any(|c| c.code() == row.class_code) {
                continue;
            }
            let deg = load_png::<f32>(&manifest.resolve(&row.degraded_path)).unwrap();
            let reference = load_png::<f32>(&manifest.resolve(&row.reference_path)).unwrap();
            befores.push(f64::from(m::psnr(&reference, &deg).unwrap()));
            let enhanced = enhance_image(&net, &deg).unwrap();
            afters.push(f64::from(m::psnr(&reference, &enhanced).unwrap()));
        }
        befores.sort_by(f64::total_cmp);
        afters.sort_by(f64::total_cmp);
        let med = |v: &[f64]| v[v.len() / 2];
        println!(
            "{}: n {} median before {:.2} after {:.2} gain {:+.2} dB, final loss {:.6}, wall {:.1}s",
            id.name(),
            befores.len(),
            med(&befores),
            med(&afters),
            med(&afters) - med(&befores),
            report.loss_tail.last().copied().unwrap_or(f64::NAN),
            t0.elapsed().as_secs_f64()
        );
    }
}

#[test]
fn probe_blur_uism_flips() {
    let mut flips = Vec::new();
    for i in 0..50u64 {
        let reference = synth_reference::<f64>(32, derive_key(0xD1EC7, &[i]));
        let blurred = degrade_blur(&reference, 3.0).unwrap();
        let before = m::uism(&reference).unwrap();
        let after = m::uism(&blurred).unwrap();
        if after >= before {
            flips.push((i, before, after));
        }
    }
    for (i, before, after) in &flips {
        println!("flip image {i}: uism before {before:.4} after {after:.4}");
    }
    println!("total flips: {}", flips.len());
}
