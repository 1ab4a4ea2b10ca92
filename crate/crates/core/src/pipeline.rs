//! The iterative enhancement loop: classify the dominant degradation, stop
//! when the image is judged clean, otherwise route through the matching
//! enhancer and repeat — recording per-iteration provenance, batch class
//! proportions, and failure diagnostics.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::{self, ClassifierError};
use crate::degrade::{DatasetManifest, DegradationClass, DegradeError, Split};
use crate::enhance::{EnhanceError, EnhancerId, EnhancerSuite};
use crate::image::io::load_image;
use crate::image::ops::resize_bilinear;
use crate::image::{ImageError, ImageF};
use crate::metrics::{psnr, uiqm, MetricError};
use crate::nn::Network;
use crate::scalar::Scalar;

/// Regression threshold (dB) used by failure scans: an iteration that costs
/// more than this much PSNR flags the image.
pub const REGRESSION_THRESHOLD_DB: f64 = 0.5;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("pipeline wants max_iterations ≥ 1, got {0}")]
    BadIterationBudget(usize),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Enhance(#[from] EnhanceError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Degrade(#[from] DegradeError),
    #[error("report i/o failure on {path}: {source}")]
    ReportIo {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Anything that can name the dominant degradation of an image, returning
/// the class and a confidence in (0, 1].
pub trait Classify<T: Scalar>: Sync {
    fn classify(&self, img: &ImageF<T>) -> Result<(DegradationClass, f64), PipelineError>;
}

impl<T: Scalar> Classify<T> for Network<T> {
    fn classify(&self, img: &ImageF<T>) -> Result<(DegradationClass, f64), PipelineError> {
        let out = classifier::classify(self, img)?;
        Ok((out.predicted, out.confidence.as_f64()))
    }
}

/// Anything that can enhance an image for a given degradation class.
pub trait Enhance<T: Scalar>: Sync {
    fn enhance(
        &self,
        class: DegradationClass,
        img: &ImageF<T>,
    ) -> Result<ImageF<T>, PipelineError>;

    /// Which enhancer the class routes to; `None` when nothing applies.
    fn enhancer_for(&self, class: DegradationClass) -> Option<EnhancerId> {
        EnhancerId::for_class(class)
    }
}

impl<T: Scalar> Enhance<T> for EnhancerSuite<T> {
    fn enhance(
        &self,
        class: DegradationClass,
        img: &ImageF<T>,
    ) -> Result<ImageF<T>, PipelineError> {
        Ok(EnhancerSuite::enhance(self, class, img)?)
    }
}

/// Whether iteration snapshots carry quality metrics.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricsMode {
    /// No per-iteration metrics (deployment mode: no reference available).
    #[default]
    None,
    /// Record PSNR against the reference (when given) and UIQM per iteration.
    Full,
}

/// Loop controls shared by single runs and batches.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub max_iterations: usize,
    pub metrics: MetricsMode,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            max_iterations: 3,
            metrics: MetricsMode::None,
        }
    }
}

/// One loop step: what was predicted, what ran, and optional quality
/// snapshots of the image as it stood *after* this iteration's action.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IterationRecord {
    /// 1-based iteration number.
    pub iteration: usize,
    pub predicted: DegradationClass,
    pub confidence: f64,
    /// The enhancer that ran; `None` exactly when the prediction was
    /// NoDegradation and the loop stopped.
    pub enhancer: Option<EnhancerId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psnr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uiqm: Option<f64>,
}

/// Why the loop ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    NoDegradation,
    MaxIterations,
}

/// Full provenance of one image's trip through the loop.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IterationTrace {
    pub id: String,
    pub stop: StopReason,
    /// PSNR of the untouched input against the reference, when computed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_psnr: Option<f64>,
    pub records: Vec<IterationRecord>,
}

impl IterationTrace {
    /// PSNR after the final iteration (falls back to the input value when
    /// snapshots were off or the loop recorded none).
    pub fn final_psnr(&self) -> Option<f64> {
        self.records
            .iter()
            .rev()
            .find_map(|r| r.psnr)
            .or(self.input_psnr)
    }

    /// Classes predicted per iteration, in order.
    pub fn predictions(&self) -> Vec<DegradationClass> {
        self.records.iter().map(|r| r.predicted).collect()
    }
}

/// A finished run: the trace plus the final image.
#[derive(Clone, Debug)]
pub struct PipelineRun<T: Scalar> {
    pub trace: IterationTrace,
    pub output: ImageF<T>,
}

/// Runs the loop on one image. Each iteration classifies the current image;
/// a NoDegradation verdict stops the loop (recorded, with no enhancer run),
/// anything else routes through the matching enhancer. The image never
/// changes size, and no enhancer ever runs for NoDegradation.
pub fn run<T: Scalar>(
    classifier: &impl Classify<T>,
    enhancers: &impl Enhance<T>,
    config: &PipelineConfig,
    id: &str,
    input: &ImageF<T>,
    reference: Option<&ImageF<T>>,
) -> Result<PipelineRun<T>, PipelineError> {
    if config.max_iterations == 0 {
        return Err(PipelineError::BadIterationBudget(0));
    }
    let snapshot = |img: &ImageF<T>| -> Result<(Option<f64>, Option<f64>), PipelineError> {
        if config.metrics == MetricsMode::None {
            return Ok((None, None));
        }
        let p = match reference {
            Some(r) => Some(psnr(img, r)?.as_f64()),
            None => None,
        };
        Ok((p, Some(uiqm(img)?.as_f64())))
    };

    let (input_psnr, _) = snapshot(input)?;
    let mut current = input.clone();
    let mut records = Vec::new();
    let mut stop = StopReason::MaxIterations;

    for iteration in 1..=config.max_iterations {
        let (predicted, confidence) = classifier.classify(&current)?;
        if predicted == DegradationClass::NoDegradation {
            let (p, u) = snapshot(&current)?;
            records.push(IterationRecord {
                iteration,
                predicted,
                confidence,
                enhancer: None,
                psnr: p,
                uiqm: u,
            });
            stop = StopReason::NoDegradation;
            break;
        }
        current = enhancers.enhance(predicted, &current)?;
        let (p, u) = snapshot(&current)?;
        records.push(IterationRecord {
            iteration,
            predicted,
            confidence,
            enhancer: enhancers.enhancer_for(predicted),
            psnr: p,
            uiqm: u,
        });
    }

    Ok(PipelineRun {
        trace: IterationTrace {
            id: id.to_string(),
            stop,
            input_psnr,
            records,
        },
        output: current,
    })
}

/// Share of images, as percentages, assigned to each class at one
/// iteration. Images whose loop already stopped keep counting as
/// NoDegradation, so every row sums to 100.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassProportions {
    pub iteration: usize,
    /// Percentage per class, indexed by class code 0..=8.
    pub percent: [f64; 9],
}

/// Builds the per-iteration class-proportion table for a batch of traces.
pub fn class_proportions(
    traces: &[IterationTrace],
    max_iterations: usize,
) -> Vec<ClassProportions> {
    let n = traces.len();
    let mut table = Vec::with_capacity(max_iterations);
    for iteration in 1..=max_iterations {
        let mut counts = [0u64; 9];
        for trace in traces {
            let class = trace
                .records
                .get(iteration - 1)
                .map(|r| r.predicted)
                .unwrap_or(DegradationClass::NoDegradation);
            counts[class.code() as usize] += 1;
        }
        let percent = if n == 0 {
            [0.0; 9]
        } else {
            std::array::from_fn(|i| counts[i] as f64 * 100.0 / n as f64)
        };
        table.push(ClassProportions { iteration, percent });
    }
    table
}

/// One image's row in a batch report.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ImageOutcome {
    pub id: String,
    pub iterations: usize,
    pub stop: StopReason,
    pub predictions: Vec<DegradationClass>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_psnr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_psnr: Option<f64>,
}

/// An item that failed mid-batch; the batch keeps going.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ItemFailure {
    pub id: String,
    pub message: String,
}

/// Everything a batch run produces: the proportion table, per-image rows,
/// per-item failures, and the full traces for downstream scans.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BatchReport {
    pub max_iterations: usize,
    pub proportions: Vec<ClassProportions>,
    pub images: Vec<ImageOutcome>,
    pub failures: Vec<ItemFailure>,
    pub traces: Vec<IterationTrace>,
}

/// Runs the loop over every manifest row (optionally one split), loading
/// degraded images as inputs and references for metric snapshots. Images
/// are resampled to `side` before entering the loop. Per-item failures are
/// collected, not fatal. When `report_path` is given the report is written
/// as deterministic JSON.
pub fn run_batch<T: Scalar>(
    classifier: &impl Classify<T>,
    enhancers: &impl Enhance<T>,
    config: &PipelineConfig,
    manifest: &DatasetManifest,
    split: Option<Split>,
    side: usize,
    report_path: Option<&Path>,
) -> Result<BatchReport, PipelineError> {
    use rayon::prelude::*;

    if config.max_iterations == 0 {
        return Err(PipelineError::BadIterationBudget(0));
    }
    let rows: Vec<_> = match split {
        Some(s) => manifest.rows_in_split(s).collect(),
        None => manifest.rows.iter().collect(),
    };

    let outcomes: Vec<Result<IterationTrace, ItemFailure>> = rows
        .par_iter()
        .map(|row| {
            let work = || -> Result<IterationTrace, PipelineError> {
                let fit = |path: &Path| -> Result<ImageF<T>, PipelineError> {
                    let img = load_image::<T>(path)?;
                    if img.height() == side && img.width() == side {
                        Ok(img)
                    } else {
                        Ok(resize_bilinear(&img, side, side)?)
                    }
                };
                let input = fit(&manifest.resolve(&row.degraded_path))?;
                let reference = if config.metrics == MetricsMode::Full {
                    Some(fit(&manifest.resolve(&row.reference_path))?)
                } else {
                    None
                };
                let run = run(
                    classifier,
                    enhancers,
                    config,
                    &row.id,
                    &input,
                    reference.as_ref(),
                )?;
                Ok(run.trace)
            };
            work().map_err(|e| ItemFailure {
                id: row.id.clone(),
                message: e.to_string(),
            })
        })
        .collect();

    let mut traces = Vec::new();
    let mut failures = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(trace) => traces.push(trace),
            Err(failure) => failures.push(failure),
        }
    }

    let images = traces
        .iter()
        .map(|t| ImageOutcome {
            id: t.id.clone(),
            iterations: t.records.len(),
            stop: t.stop,
            predictions: t.predictions(),
            input_psnr: t.input_psnr,
            final_psnr: if t.input_psnr.is_some() {
                t.final_psnr()
            } else {
                None
            },
        })
        .collect();

    let report = BatchReport {
        max_iterations: config.max_iterations,
        proportions: class_proportions(&traces, config.max_iterations),
        images,
        failures,
        traces,
    };
    if let Some(path) = report_path {
        let json = serde_json::to_string_pretty(&report)?;
        std::fs::write(path, json.as_bytes()).map_err(|source| PipelineError::ReportIo {
            path: path.to_path_buf(),
            source,
        })?;
    }
    Ok(report)
}

/// One flagged regression: iteration `iteration` lost `drop_db` dB of PSNR
/// relative to the previous image state.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FailureCase {
    pub id: String,
    pub iteration: usize,
    pub drop_db: f64,
}

/// Final-PSNR frequency table at fixed-width bins (the failure-analysis
/// histogram). Bin `i` covers `[lo + i·bin_width, lo + (i+1)·bin_width)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PsnrHistogram {
    pub bin_width: f64,
    pub lo: f64,
    pub counts: Vec<u64>,
}

/// Histogram of values at `bin_width`-wide bins anchored at the floored
/// minimum. Empty input gives an empty histogram.
pub fn psnr_histogram(values: &[f64], bin_width: f64) -> PsnrHistogram {
    assert!(bin_width > 0.0, "bin width must be positive");
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.is_empty() {
        return PsnrHistogram {
            bin_width,
            lo: 0.0,
            counts: Vec::new(),
        };
    }
    let min = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let max = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = (min / bin_width).floor() * bin_width;
    let nbins = ((max - lo) / bin_width).floor() as usize + 1;
    let mut counts = vec![0u64; nbins];
    for v in finite {
        let idx = (((v - lo) / bin_width).floor() as usize).min(nbins - 1);
        counts[idx] += 1;
    }
    PsnrHistogram {
        bin_width,
        lo,
        counts,
    }
}

/// Scan results: flagged regressions, their share of the corpus, and the
/// final-PSNR histogram.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FailureScan {
    pub flagged: Vec<FailureCase>,
    pub flagged_percent: f64,
    pub histogram: PsnrHistogram,
}

/// Flags every iteration whose PSNR fell more than `threshold_db` below the
/// previous state (the input counts as iteration 0). Traces without PSNR
/// snapshots contribute nothing. A monotone-improving corpus yields an
/// empty flag list.
pub fn failure_scan(traces: &[IterationTrace], threshold_db: f64) -> FailureScan {
    let mut flagged = Vec::new();
    let mut finals = Vec::new();
    for trace in traces {
        let mut prev = trace.input_psnr;
        for record in &trace.records {
            let Some(now) = record.psnr else { continue };
            if let Some(before) = prev {
                if now < before - threshold_db {
                    flagged.push(FailureCase {
                        id: trace.id.clone(),
                        iteration: record.iteration,
                        drop_db: before - now,
                    });
                }
            }
            prev = Some(now);
        }
        if let Some(f) = trace.final_psnr() {
            finals.push(f);
        }
    }
    let flagged_percent = if traces.is_empty() {
        0.0
    } else {
        flagged.len() as f64 * 100.0 / traces.len() as f64
    };
    FailureScan {
        flagged,
        flagged_percent,
        histogram: psnr_histogram(&finals, 1.0),
    }
}
