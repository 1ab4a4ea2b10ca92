//! Command machinery: dataset preparation, training runs that end in
//! checkpoints, evaluation tables, and the gated end-to-end run. Every
//! file this module writes is a pure function of its inputs (no
//! timestamps, no machine identifiers), so re-running a command
//! reproduces artifacts byte for byte.

use anyhow::{bail, Context, Result};
use aquaforge::classifier::{self, ClassifierTrainConfig, EvalSummary};
use aquaforge::degrade::{
    build_dataset_with, DatasetManifest, DegradationClass, SeverityTier, Split, TierTable,
};
use aquaforge::enhance::{
    build_ablation, enhance_image, enhancer_meta, train_enhancer, EnhancerId, EnhancerSuite,
    EnhancerTrainConfig,
};
use aquaforge::image::io::{load_image, save_png};
use aquaforge::image::ops::resize_bilinear;
use aquaforge::image::ImageF;
use aquaforge::metrics::{self, format_sig6, MetricReport};
use aquaforge::nn::{
    count_macs, count_params, gmacs, load_checkpoint, save_checkpoint, NetworkDef, TrainMeta,
};
use aquaforge::pipeline::{
    failure_scan, run, run_batch, IterationTrace, MetricsMode, PipelineConfig,
    REGRESSION_THRESHOLD_DB,
};
use aquaforge::synth::synth_corpus;
use serde::Serialize;
use std::fs;
use std::path::Path;
use std::time::Instant;

use crate::config::{PipelineFileConfig, RunConfig, SynthRefsConfig};

/// Environment variable capping the worker thread pool.
pub const THREADS_ENV: &str = "AQUAFORGE_THREADS";

/// Caps the global worker pool: explicit value first, `AQUAFORGE_THREADS`
/// second, library default otherwise. Safe to call more than once; only
/// the first initialization binds.
pub fn init_thread_pool(cap: Option<usize>) -> Result<()> {
    let cap = match cap {
        Some(n) => Some(n),
        None => match std::env::var(THREADS_ENV) {
            Ok(raw) => Some(
                raw.trim()
                    .parse::<usize>()
                    .with_context(|| format!("{THREADS_ENV} must be a positive integer, got {raw:?}"))?,
            ),
            Err(_) => None,
        },
    };
    let Some(threads) = cap else { return Ok(()) };
    if threads == 0 {
        bail!("thread cap must be at least 1");
    }
    // A second initialization in the same process keeps the first pool.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global();
    Ok(())
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .with_context(|| format!("creating directory {}", parent.display()))?;
        }
    }
    Ok(())
}

fn count_reference_images(dir: &Path) -> usize {
    fs::read_dir(dir)
        .map(|entries| {
            entries
                .filter_map(|e| e.ok())
                .filter(|e| {
                    e.path()
                        .extension()
                        .and_then(|x| x.to_str())
                        .is_some_and(|x| x.eq_ignore_ascii_case("png"))
                })
                .count()
        })
        .unwrap_or(0)
}

/// Synthesizes references when asked for and none exist, then builds the
/// full degraded dataset. Returns the manifest (also saved to
/// `<data_dir>/manifest.jsonl`).
pub fn prepare_dataset(
    refs_dir: &Path,
    data_dir: &Path,
    tiers: Option<&TierTable>,
    synth: Option<&SynthRefsConfig>,
    seed: u64,
) -> Result<DatasetManifest> {
    if let Some(synth) = synth {
        if count_reference_images(refs_dir) == 0 {
            println!(
                "synthesizing {} references at {}x{} into {}",
                synth.count,
                synth.side,
                synth.side,
                refs_dir.display()
            );
            synth_corpus(refs_dir, synth.count, synth.side, seed)?;
        }
    }
    let refs = count_reference_images(refs_dir);
    if refs == 0 {
        bail!("no .png reference images in {}", refs_dir.display());
    }
    println!(
        "building dataset from {refs} references into {}",
        data_dir.display()
    );
    let default_table = TierTable::default();
    let table = tiers.unwrap_or(&default_table);
    let manifest =
        build_dataset_with::<f32>(table, refs_dir, data_dir, &SeverityTier::ALL, seed)?;
    let train = manifest.rows_in_split(Split::Train).count();
    let test = manifest.rows_in_split(Split::Test).count();
    println!(
        "dataset ready: {} rows ({} degraded), split {train} train / {test} test",
        manifest.rows.len(),
        manifest.degraded_count()
    );
    Ok(manifest)
}

/// Trains the classifier, writes its checkpoint, and reports held-out
/// accuracy and per-class F1.
pub fn train_classifier_to(
    manifest: &DatasetManifest,
    out: &Path,
    config: &ClassifierTrainConfig,
) -> Result<EvalSummary> {
    let started = Instant::now();
    println!(
        "training classifier at {0}x{0} for {1} epochs (seed {2})",
        config.input_side, config.epochs, config.seed
    );
    let (net, report) = classifier::train_classifier::<f32>(manifest, config, |epoch, loss| {
        println!("  epoch {epoch}: loss {loss:.6}");
    })?;
    let meta = TrainMeta {
        kind: "classifier".to_string(),
        enhancer: None,
        serves: DegradationClass::ALL.iter().map(|c| c.code()).collect(),
        input_side: config.input_side,
        epochs: config.epochs,
        seed: config.seed,
        loss_tail: report.loss_tail.clone(),
    };
    ensure_parent(out)?;
    save_checkpoint(out, &net, &meta)?;
    println!(
        "saved {} after {:.1}s",
        out.display(),
        started.elapsed().as_secs_f64()
    );
    let eval = classifier::evaluate(&net, manifest, Split::Test)?;
    println!("{}", eval.render());
    Ok(eval)
}

/// Median held-out quality before and after one enhancer.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GainStats {
    pub pairs: usize,
    pub median_before_db: f64,
    pub median_after_db: f64,
}

impl GainStats {
    pub fn gain_db(&self) -> f64 {
        self.median_after_db - self.median_before_db
    }
}

fn median(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    values[values.len() / 2]
}

/// Measures an enhancer's median held-out PSNR before and after
/// enhancement over every test pair of the classes it serves.
pub fn enhancer_gain(
    net: &aquaforge::nn::Network<f32>,
    manifest: &DatasetManifest,
    id: EnhancerId,
    side: usize,
) -> Result<GainStats> {
    use rayon::prelude::*;

    let served: Vec<u8> = id.serves().iter().map(|c| c.code()).collect();
    let rows: Vec<_> = manifest
        .rows_in_split(Split::Test)
        .filter(|r| served.contains(&r.class_code))
        .collect();
    if rows.is_empty() {
        bail!("manifest has no test pairs for enhancer {}", id.name());
    }
    let fit = |path: &Path| -> Result<ImageF<f32>> {
        let img = load_image::<f32>(path)?;
        Ok(if img.height() == side && img.width() == side {
            img
        } else {
            resize_bilinear(&img, side, side)?
        })
    };
    let scored: Vec<(f64, f64)> = rows
        .par_iter()
        .map(|row| -> Result<(f64, f64)> {
            let degraded = fit(&manifest.resolve(&row.degraded_path))?;
            let reference = fit(&manifest.resolve(&row.reference_path))?;
            let before = f64::from(metrics::psnr(&reference, &degraded)?);
            let enhanced = enhance_image(net, &degraded)?;
            let after = f64::from(metrics::psnr(&reference, &enhanced)?);
            Ok((before, after))
        })
        .collect::<Result<_>>()?;
    Ok(GainStats {
        pairs: scored.len(),
        median_before_db: median(scored.iter().map(|s| s.0).collect()),
        median_after_db: median(scored.iter().map(|s| s.1).collect()),
    })
}

/// Trains one enhancer, writes its checkpoint, and reports the held-out
/// median PSNR gain.
pub fn train_enhancer_to(
    manifest: &DatasetManifest,
    id: EnhancerId,
    out: &Path,
    config: &EnhancerTrainConfig,
) -> Result<GainStats> {
    let started = Instant::now();
    println!(
        "training {} at {1}x{1} for {2} epochs (seed {3})",
        id.name(),
        config.input_side,
        config.epochs,
        config.seed
    );
    let every = (config.epochs / 10).max(1);
    let (net, report) = train_enhancer::<f32>(manifest, id, config, |epoch, loss| {
        if epoch % every == 0 || epoch + 1 == config.epochs {
            println!("  epoch {epoch}: loss {loss:.6}");
        }
    })?;
    ensure_parent(out)?;
    save_checkpoint(out, &net, &enhancer_meta(id, config, &report))?;
    let stats = enhancer_gain(&net, manifest, id, config.input_side)?;
    println!(
        "saved {} after {:.1}s; median held-out psnr {:.2} -> {:.2} dB ({:+.2} dB, {} pairs)",
        out.display(),
        started.elapsed().as_secs_f64(),
        stats.median_before_db,
        stats.median_after_db,
        stats.gain_db(),
        stats.pairs
    );
    Ok(stats)
}

/// Evaluates classifier checkpoint accuracy on one split; optionally
/// writes the summary (JSON) next to printing the confusion table.
pub fn eval_classifier_to(
    model: &Path,
    manifest: &DatasetManifest,
    split: Split,
    report_out: Option<&Path>,
) -> Result<EvalSummary> {
    let eval = classifier::evaluate_checkpoint::<f32>(model, manifest, split)?;
    println!("{}", eval.render());
    if let Some(path) = report_out {
        ensure_parent(path)?;
        let mut body = serde_json::to_string_pretty(&eval)?;
        body.push('\n');
        fs::write(path, body).with_context(|| format!("writing {}", path.display()))?;
        println!("wrote {}", path.display());
    }
    Ok(eval)
}

/// Computes fidelity metrics (degraded vs. reference) plus no-reference
/// scores for every manifest row in `split`, writing CSV and/or JSON-lines
/// tables. Returns the number of rows evaluated.
pub fn evaluate_tables(
    manifest: &DatasetManifest,
    split: Option<Split>,
    csv: Option<&Path>,
    jsonl: Option<&Path>,
) -> Result<usize> {
    use rayon::prelude::*;

    let rows: Vec<_> = match split {
        Some(s) => manifest.rows_in_split(s).collect(),
        None => manifest.rows.iter().collect(),
    };
    if rows.is_empty() {
        bail!("manifest has no rows in the requested split");
    }
    let reports: Vec<MetricReport> = rows
        .par_iter()
        .map(|row| -> Result<MetricReport> {
            let reference = load_image::<f32>(&manifest.resolve(&row.reference_path))?;
            let degraded = load_image::<f32>(&manifest.resolve(&row.degraded_path))?;
            let stem = row.id.split("__").next().unwrap_or(&row.id);
            let mut report = MetricReport::for_pair(row.id.clone(), stem);
            report.insert_all(metrics::fr_summary(&reference, &degraded)?.columns())?;
            report.insert_all(metrics::nr_summary(&degraded)?.columns())?;
            Ok(report)
        })
        .collect::<Result<_>>()?;
    if let Some(path) = csv {
        ensure_parent(path)?;
        let mut buffer = Vec::new();
        metrics::write_csv(&reports, &mut buffer)?;
        fs::write(path, buffer).with_context(|| format!("writing {}", path.display()))?;
        println!("wrote {}", path.display());
    }
    if let Some(path) = jsonl {
        ensure_parent(path)?;
        let mut buffer = Vec::new();
        metrics::write_jsonl(&reports, &mut buffer)?;
        fs::write(path, buffer).with_context(|| format!("writing {}", path.display()))?;
        println!("wrote {}", path.display());
    }
    Ok(reports.len())
}

/// Resolves an architecture name to its computation graph. Accepts the
/// classifier, every enhancer name, `cb` (the shared colour-balance
/// shape), and `ablation-<k>` study variants.
pub fn arch_def(arch: &str, side: usize) -> Result<NetworkDef> {
    if arch == "classifier" {
        return Ok(classifier::build_classifier(side));
    }
    if arch == "cb" {
        return Ok(EnhancerId::CbR.build(side)?);
    }
    if let Ok(id) = EnhancerId::from_name(arch) {
        return Ok(id.build(side)?);
    }
    if let Some(index) = arch.strip_prefix("ablation-") {
        let index: usize = index
            .parse()
            .with_context(|| format!("bad ablation index in {arch:?}"))?;
        return Ok(build_ablation(index, side)?);
    }
    bail!(
        "unknown architecture {arch:?}; expected classifier, cb, ablation-<1..12>, or one of: {}",
        EnhancerId::ALL.map(|id| id.name()).join(", ")
    )
}

/// Prints parameter and operation counts for one architecture.
pub fn print_arch_accounting(arch: &str, side: usize) -> Result<()> {
    let def = arch_def(arch, side)?;
    let params = count_params(&def)?;
    let macs = count_macs(&def)?;
    println!("arch {arch}");
    println!("side {side}");
    println!("params {params}");
    println!("params_m {}", format_sig6(params as f64 / 1e6));
    println!("gflops {}", format_sig6(gmacs(&def)?));
    println!("macs {macs}");
    Ok(())
}

/// Quantizes a unit-range sample to its 8-bit level, matching the
/// convention of the quality metrics (round half away from zero).
fn level8(v: f32) -> usize {
    let scaled = v.clamp(0.0, 1.0) * 255.0;
    ((scaled + 0.5).floor() as usize).min(255)
}

/// Writes a 256-bin per-channel level histogram as CSV. Column counts sum
/// to the pixel count of the image.
pub fn histogram_csv(input: &Path, out: &Path) -> Result<()> {
    let img = load_image::<f32>(input)?;
    let channels = img.channels();
    let mut counts = vec![[0u64; 256]; channels];
    for c in 0..channels {
        for y in 0..img.height() {
            for x in 0..img.width() {
                counts[c][level8(img.get(y, x, c))] += 1;
            }
        }
    }
    let names: Vec<String> = if channels == 3 {
        vec!["r".into(), "g".into(), "b".into()]
    } else {
        (0..channels).map(|c| format!("c{c}")).collect()
    };
    let mut body = String::from("bin");
    for name in &names {
        body.push(',');
        body.push_str(name);
    }
    body.push('\n');
    for bin in 0..256 {
        body.push_str(&bin.to_string());
        for channel in &counts {
            body.push(',');
            body.push_str(&channel[bin].to_string());
        }
        body.push('\n');
    }
    ensure_parent(out)?;
    fs::write(out, body).with_context(|| format!("writing {}", out.display()))?;
    println!(
        "wrote {} ({} channels, {} pixels each)",
        out.display(),
        channels,
        img.height() * img.width()
    );
    Ok(())
}

/// Serialized iteration trace with a schema tag, as written by `enhance`.
#[derive(Serialize)]
struct TraceFile<'a> {
    schema: &'static str,
    #[serde(flatten)]
    trace: &'a IterationTrace,
}

/// Runs the iterative enhancement loop over one image file.
pub fn enhance_one(
    config_path: &Path,
    input: &Path,
    output: &Path,
    trace_path: Option<&Path>,
) -> Result<()> {
    let file_config = PipelineFileConfig::load(config_path)?;
    let (classifier_net, meta) = load_checkpoint::<f32>(&file_config.classifier)?;
    if meta.kind != "classifier" {
        bail!(
            "{} is a {} checkpoint, not a classifier",
            file_config.classifier.display(),
            meta.kind
        );
    }
    let side = classifier::input_side(&classifier_net);
    let suite = EnhancerSuite::<f32>::load(&file_config.enhancers, side)?;

    let img = load_image::<f32>(input)?;
    let img = if img.height() == side && img.width() == side {
        img
    } else {
        println!(
            "resampling {}x{} input to the models' {side}x{side} working size",
            img.height(),
            img.width()
        );
        resize_bilinear(&img, side, side)?
    };
    let reference = match &file_config.reference {
        Some(path) => {
            let loaded = load_image::<f32>(path)?;
            Some(if loaded.height() == side && loaded.width() == side {
                loaded
            } else {
                resize_bilinear(&loaded, side, side)?
            })
        }
        None => None,
    };

    let pipeline_config = PipelineConfig {
        max_iterations: file_config.max_iterations,
        metrics: file_config.metrics,
    };
    let id = input
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("input")
        .to_string();
    let run_result = run(
        &classifier_net,
        &suite,
        &pipeline_config,
        &id,
        &img,
        reference.as_ref(),
    )?;

    for record in &run_result.trace.records {
        let action = match record.enhancer {
            Some(id) => format!("-> {}", id.name()),
            None => "-> stop".to_string(),
        };
        let quality = match (record.psnr, record.uiqm) {
            (Some(p), Some(u)) => format!(" (psnr {p:.2} dB, uiqm {u:.3})"),
            (None, Some(u)) => format!(" (uiqm {u:.3})"),
            _ => String::new(),
        };
        println!(
            "iteration {}: {} (confidence {:.3}) {action}{quality}",
            record.iteration,
            record.predicted.name(),
            record.confidence
        );
    }
    println!("stop: {:?}", run_result.trace.stop);

    ensure_parent(output)?;
    save_png(&run_result.output, output)?;
    println!("wrote {}", output.display());
    if let Some(path) = trace_path {
        ensure_parent(path)?;
        let mut body = serde_json::to_string_pretty(&TraceFile {
            schema: "aquaforge.trace.v1",
            trace: &run_result.trace,
        })?;
        body.push('\n');
        fs::write(path, body).with_context(|| format!("writing {}", path.display()))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

/// Per-degradation accounting and, when trained models are supplied,
/// held-out restoration quality. Header:
/// `degradation,params_m,gflops,mse,psnr`.
pub fn write_enhancer_table(
    path: &Path,
    accounting_side: usize,
    trained: Option<(&EnhancerSuite<f32>, &DatasetManifest)>,
) -> Result<()> {
    use rayon::prelude::*;

    let mut body = String::from("degradation,params_m,gflops,mse,psnr\n");
    for class in DegradationClass::ALL {
        let Some(id) = EnhancerId::for_class(class) else {
            continue;
        };
        let def = id.build(accounting_side)?;
        let params_m = count_params(&def)? as f64 / 1e6;
        let gflops = gmacs(&def)?;
        let (mse_cell, psnr_cell) = match trained {
            None => (String::new(), String::new()),
            Some((suite, manifest)) => {
                let net = suite.get(id).with_context(|| {
                    format!("suite is missing the {} checkpoint", id.name())
                })?;
                let side = suite.input_side();
                let rows: Vec<_> = manifest
                    .rows_in_split(Split::Test)
                    .filter(|r| r.class_code == class.code())
                    .collect();
                if rows.is_empty() {
                    bail!("manifest has no test rows for class {}", class.name());
                }
                let scored: Vec<(f64, f64)> = rows
                    .par_iter()
                    .map(|row| -> Result<(f64, f64)> {
                        let fit = |p: &Path| -> Result<ImageF<f32>> {
                            let img = load_image::<f32>(p)?;
                            Ok(if img.height() == side && img.width() == side {
                                img
                            } else {
                                resize_bilinear(&img, side, side)?
                            })
                        };
                        let degraded = fit(&manifest.resolve(&row.degraded_path))?;
                        let reference = fit(&manifest.resolve(&row.reference_path))?;
                        let enhanced = enhance_image(net, &degraded)?;
                        Ok((
                            f64::from(metrics::mse(&reference, &enhanced)?),
                            f64::from(metrics::psnr(&reference, &enhanced)?),
                        ))
                    })
                    .collect::<Result<_>>()?;
                let n = scored.len() as f64;
                let mean_mse = scored.iter().map(|s| s.0).sum::<f64>() / n;
                let mean_psnr = scored.iter().map(|s| s.1).sum::<f64>() / n;
                (format_sig6(mean_mse), format_sig6(mean_psnr))
            }
        };
        body.push_str(&format!(
            "{},{},{},{},{}\n",
            class.name(),
            format_sig6(params_m),
            format_sig6(gflops),
            mse_cell,
            psnr_cell
        ));
    }
    ensure_parent(path)?;
    fs::write(path, body).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

/// Per-class F1 table for a trained classifier (`class,f1`, plus a final
/// `macro` row).
pub fn write_classifier_f1_table(path: &Path, eval: &EvalSummary) -> Result<()> {
    let mut body = String::from("class,f1\n");
    for class in DegradationClass::ALL {
        body.push_str(&format!(
            "{},{}\n",
            class.name(),
            format_sig6(eval.per_class_f1[class.code() as usize])
        ));
    }
    body.push_str(&format!("macro,{}\n", format_sig6(eval.macro_f1)));
    ensure_parent(path)?;
    fs::write(path, body).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

/// Reproduces the headline tables from existing checkpoints (or
/// accounting columns only).
pub fn reproduce_tables(
    out_dir: &Path,
    accounting_side: usize,
    models_dir: Option<&Path>,
    manifest_path: Option<&Path>,
) -> Result<()> {
    fs::create_dir_all(out_dir)
        .with_context(|| format!("creating directory {}", out_dir.display()))?;
    match (models_dir, manifest_path) {
        (None, _) | (_, None) => {
            write_enhancer_table(&out_dir.join("enhancers.csv"), accounting_side, None)?;
        }
        (Some(models), Some(manifest_path)) => {
            let manifest = DatasetManifest::load(manifest_path)?;
            let classifier_path = models.join("classifier.aqfn");
            let (classifier_net, _) = load_checkpoint::<f32>(&classifier_path)?;
            let side = classifier::input_side(&classifier_net);
            let suite = EnhancerSuite::<f32>::load(models, side)?;
            write_enhancer_table(
                &out_dir.join("enhancers.csv"),
                accounting_side,
                Some((&suite, &manifest)),
            )?;
            let eval = classifier::evaluate(&classifier_net, &manifest, Split::Test)?;
            println!("classifier test accuracy {:.4}", eval.accuracy);
            write_classifier_f1_table(&out_dir.join("classifier_f1.csv"), &eval)?;
        }
    }
    Ok(())
}

/// One checked quality bar of the end-to-end run.
#[derive(Clone, Debug, Serialize)]
pub struct Gate {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Gate {
    fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            pass: value >= threshold,
        }
    }
}

/// Minimum held-out accuracy for the trained classifier.
const MIN_ACCURACY: f64 = 0.80;
/// Minimum held-out macro F1 for the trained classifier.
const MIN_MACRO_F1: f64 = 0.75;

/// Required median held-out PSNR gain per enhancer. Blur and the
/// haze/contrast pair destroy information that cannot be re-estimated
/// pixel-perfectly, so their bars are lower than the pointwise
/// degradations'.
fn required_gain_db(id: EnhancerId) -> f64 {
    match id {
        EnhancerId::Db | EnhancerId::Dhce => 2.0,
        _ => 6.0,
    }
}

/// Summary document written at the end of an `end-to-end` run.
#[derive(Serialize)]
struct RunSummary {
    schema: &'static str,
    all_passed: bool,
    gates: Vec<Gate>,
    classifier_accuracy: f64,
    classifier_macro_f1: f64,
    gains_db: std::collections::BTreeMap<&'static str, f64>,
    mean_input_psnr_db: f64,
    mean_final_psnr_db: f64,
    flagged_percent: f64,
}

/// Builds the dataset, trains every model, runs the loop over the test
/// split, writes reports, and checks the quality gates. Returns whether
/// all gates passed.
pub fn end_to_end(config: &RunConfig) -> Result<bool> {
    let dataset_dir = config.out_dir.join("dataset");
    let models_dir = config.out_dir.join("models");
    let reports_dir = config.out_dir.join("reports");
    fs::create_dir_all(&models_dir)
        .with_context(|| format!("creating directory {}", models_dir.display()))?;
    fs::create_dir_all(&reports_dir)
        .with_context(|| format!("creating directory {}", reports_dir.display()))?;

    println!("[1/5] dataset");
    let manifest = prepare_dataset(
        &config.refs_dir,
        &dataset_dir,
        config.tiers.as_ref(),
        config.synth_refs.as_ref(),
        config.seed,
    )?;

    println!("[2/5] classifier");
    let classifier_path = models_dir.join("classifier.aqfn");
    let eval = train_classifier_to(&manifest, &classifier_path, &config.classifier_config())?;

    println!("[3/5] enhancers");
    let mut gains = std::collections::BTreeMap::new();
    let mut gates = vec![
        Gate::at_least("classifier_accuracy", eval.accuracy, MIN_ACCURACY),
        Gate::at_least("classifier_macro_f1", eval.macro_f1, MIN_MACRO_F1),
    ];
    for id in EnhancerId::ALL {
        let out = EnhancerSuite::<f32>::checkpoint_path(&models_dir, id);
        let stats = train_enhancer_to(&manifest, id, &out, &config.enhancer_config(id))?;
        gains.insert(id.name(), stats.gain_db());
        gates.push(Gate::at_least(
            format!("gain_{}", id.name()),
            stats.gain_db(),
            required_gain_db(id),
        ));
    }

    println!("[4/5] enhancement loop over the test split");
    let (classifier_net, _) = load_checkpoint::<f32>(&classifier_path)?;
    let suite = EnhancerSuite::<f32>::load(&models_dir, config.input_side)?;
    let pipeline_config = PipelineConfig {
        max_iterations: config.max_iterations,
        metrics: MetricsMode::Full,
    };
    let batch = run_batch(
        &classifier_net,
        &suite,
        &pipeline_config,
        &manifest,
        Some(Split::Test),
        config.input_side,
        Some(&reports_dir.join("batch.json")),
    )?;
    for failure in &batch.failures {
        println!("item failed: {}: {}", failure.id, failure.message);
    }
    let finals: Vec<f64> = batch.images.iter().filter_map(|i| i.final_psnr).collect();
    let inputs: Vec<f64> = batch.images.iter().filter_map(|i| i.input_psnr).collect();
    if finals.is_empty() || inputs.is_empty() {
        bail!("batch run produced no scored images");
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (mean_input, mean_final) = (mean(&inputs), mean(&finals));
    let scan = failure_scan(&batch.traces, REGRESSION_THRESHOLD_DB);
    println!(
        "loop over {} images: mean psnr {mean_input:.2} -> {mean_final:.2} dB, {:.1}% regressed more than {REGRESSION_THRESHOLD_DB} dB",
        batch.images.len(),
        scan.flagged_percent
    );
    gates.push(Gate::at_least(
        "loop_mean_final_vs_input_psnr",
        mean_final,
        mean_input,
    ));

    println!("[5/5] reports");
    write_enhancer_table(
        &reports_dir.join("enhancers.csv"),
        256,
        Some((&suite, &manifest)),
    )?;
    write_classifier_f1_table(&reports_dir.join("classifier_f1.csv"), &eval)?;
    if config.metrics == MetricsMode::Full {
        evaluate_tables(
            &manifest,
            Some(Split::Test),
            Some(&reports_dir.join("metrics.csv")),
            Some(&reports_dir.join("metrics.jsonl")),
        )?;
    }

    let all_passed = gates.iter().all(|g| g.pass);
    for gate in &gates {
        println!(
            "gate {}: {} (value {}, needs >= {})",
            gate.name,
            if gate.pass { "PASS" } else { "FAIL" },
            format_sig6(gate.value),
            format_sig6(gate.threshold)
        );
    }
    let summary = RunSummary {
        schema: "aquaforge.summary.v1",
        all_passed,
        gates,
        classifier_accuracy: eval.accuracy,
        classifier_macro_f1: eval.macro_f1,
        gains_db: gains,
        mean_input_psnr_db: mean_input,
        mean_final_psnr_db: mean_final,
        flagged_percent: scan.flagged_percent,
    };
    let summary_path = reports_dir.join("summary.json");
    let mut body = serde_json::to_string_pretty(&summary)?;
    body.push('\n');
    fs::write(&summary_path, body)
        .with_context(|| format!("writing {}", summary_path.display()))?;
    println!("wrote {}", summary_path.display());
    Ok(all_passed)
}
