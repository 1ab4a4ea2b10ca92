//! Command-line surface for the enhancement toolkit: dataset building,
//! model training, the iterative enhancement loop, and report generation.
//! Argument parsing lives here; the work behind each subcommand is in
//! [`ops`], and run-configuration files are described in [`config`].

pub mod config;
pub mod ops;

use anyhow::{bail, Result};
use aquaforge::classifier::ClassifierTrainConfig;
use aquaforge::degrade::{
    apply, sample_spec, DatasetManifest, DegradationClass, SeverityTier, Split,
};
use aquaforge::enhance::{EnhancerId, EnhancerTrainConfig};
use aquaforge::image::io::{load_image, save_png};
use clap::{Parser, Subcommand};
use std::path::PathBuf;

use crate::config::RunConfig;

/// How a successful parse finished: cleanly, or with quality gates failed
/// (mapped to exit code 1).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Done,
    GateFailed,
}

#[derive(Parser, Debug)]
#[command(
    name = "aquaforge",
    version,
    about = "Degradation-aware underwater image enhancement toolkit"
)]
pub struct Cli {
    /// Cap worker threads (overrides the AQUAFORGE_THREADS variable).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build a degraded dataset (8 degradations x 3 severity tiers per
    /// reference, plus untouched copies) with a JSON-lines manifest.
    BuildDataset {
        /// Directory of reference .png images.
        #[arg(long)]
        refs: PathBuf,
        /// Output dataset directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Apply one degradation to one image.
    Degrade {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Degradation class name (e.g. noisy, hazy, low_illumination).
        #[arg(long)]
        class: String,
        /// Severity tier: a (mild), b (medium), or c (severe).
        #[arg(long, default_value = "b")]
        tier: String,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Train the dominant-degradation classifier on a dataset manifest.
    TrainClassifier {
        #[arg(long)]
        manifest: PathBuf,
        /// Output checkpoint path (.aqfn).
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
        /// Square working size the model trains at.
        #[arg(long)]
        side: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train the enhancer that serves one degradation class.
    TrainEnhancer {
        /// Degradation class the enhancer must fix (e.g. noisy, bluish).
        #[arg(long)]
        class: String,
        #[arg(long)]
        manifest: PathBuf,
        /// Output checkpoint path (.aqfn).
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
        /// Square working size the model trains at.
        #[arg(long)]
        side: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the iterative classify-then-enhance loop over one image.
    Enhance {
        /// Pipeline config (TOML or JSON) naming the trained checkpoints.
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Optional JSON file receiving the per-iteration trace.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Score every manifest row with full-reference and no-reference
    /// quality metrics.
    Evaluate {
        #[arg(long)]
        manifest: PathBuf,
        /// Restrict to one split (train or test); defaults to all rows.
        #[arg(long)]
        split: Option<String>,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        jsonl: Option<PathBuf>,
    },
    /// Report accuracy and per-class F1 for a classifier checkpoint.
    EvalClassifier {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        /// Optional JSON file receiving the evaluation summary.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, default_value = "test")]
        split: String,
    },
    /// Print parameter and operation counts for one architecture.
    Params {
        /// classifier, cb, ablation-<1..12>, or an enhancer name
        /// (ic, dn, db, dhce, cb_r, cb_g, cb_b).
        #[arg(long)]
        arch: String,
        #[arg(long, default_value_t = 256)]
        side: usize,
    },
    /// Write a 256-bin per-channel level histogram as CSV.
    Histogram {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Regenerate the per-enhancer accounting/quality table and the
    /// classifier F1 table.
    ReproduceTables {
        /// Output directory for the CSV tables.
        #[arg(long)]
        out: PathBuf,
        /// Emit architecture accounting columns only (no checkpoints needed).
        #[arg(long)]
        accounting_only: bool,
        /// Directory of trained checkpoints (classifier.aqfn + enhancers).
        #[arg(long)]
        models: Option<PathBuf>,
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Input side for the accounting columns.
        #[arg(long, default_value_t = 256)]
        side: usize,
    },
    /// Run the whole desk-scale study from one config: build the dataset,
    /// train all models, run the loop, write reports, check quality gates.
    EndToEnd {
        /// Run config (TOML or JSON).
        #[arg(long)]
        config: PathBuf,
    },
}

fn parse_split(name: &str) -> Result<Split> {
    match name {
        "train" => Ok(Split::Train),
        "test" => Ok(Split::Test),
        other => bail!("unknown split {other:?}; expected train or test"),
    }
}

fn parse_class(name: &str) -> Result<DegradationClass> {
    DegradationClass::from_name(name).ok_or_else(|| {
        anyhow::anyhow!(
            "unknown degradation class {name:?}; expected one of: {}",
            DegradationClass::ALL.map(|c| c.name()).join(", ")
        )
    })
}

/// Executes a parsed command line. `Err` means a usage, configuration, or
/// runtime failure (exit 2); `Ok(GateFailed)` means the work finished but
/// a quality gate did not hold (exit 1).
pub fn run(cli: Cli) -> Result<Outcome> {
    ops::init_thread_pool(cli.threads)?;
    match cli.command {
        Command::BuildDataset { refs, out, seed } => {
            ops::prepare_dataset(&refs, &out, None, None, seed)?;
        }
        Command::Degrade {
            input,
            out,
            class,
            tier,
            seed,
        } => {
            let class = parse_class(&class)?;
            let tier = SeverityTier::from_name(&tier)?;
            let spec = sample_spec(class, tier, seed)?;
            let img = load_image::<f32>(&input)?;
            let degraded = apply(&img, &spec, seed)?;
            if let Some(parent) = out.parent() {
                if !parent.as_os_str().is_empty() {
                    std::fs::create_dir_all(parent)?;
                }
            }
            save_png(&degraded, &out)?;
            println!(
                "applied {} tier {} (seed {seed}) -> {}",
                class.name(),
                tier.name(),
                out.display()
            );
        }
        Command::TrainClassifier {
            manifest,
            out,
            epochs,
            batch_size,
            learning_rate,
            side,
            seed,
        } => {
            let manifest = DatasetManifest::load(&manifest)?;
            let defaults = ClassifierTrainConfig::default();
            let config = ClassifierTrainConfig {
                input_side: side.unwrap_or(defaults.input_side),
                epochs: epochs.unwrap_or(defaults.epochs),
                batch_size: batch_size.unwrap_or(defaults.batch_size),
                learning_rate: learning_rate.unwrap_or(defaults.learning_rate),
                seed: seed.unwrap_or(defaults.seed),
            };
            ops::train_classifier_to(&manifest, &out, &config)?;
        }
        Command::TrainEnhancer {
            class,
            manifest,
            out,
            epochs,
            batch_size,
            learning_rate,
            side,
            seed,
        } => {
            let class = parse_class(&class)?;
            let Some(id) = EnhancerId::for_class(class) else {
                bail!("class {} needs no enhancer", class.name());
            };
            let manifest = DatasetManifest::load(&manifest)?;
            let defaults = EnhancerTrainConfig::default();
            let config = EnhancerTrainConfig {
                input_side: side.unwrap_or(defaults.input_side),
                epochs: epochs.unwrap_or(defaults.epochs),
                batch_size: batch_size.unwrap_or(defaults.batch_size),
                learning_rate: learning_rate.unwrap_or(defaults.learning_rate),
                seed: seed.unwrap_or(defaults.seed),
            };
            ops::train_enhancer_to(&manifest, id, &out, &config)?;
        }
        Command::Enhance {
            config,
            input,
            out,
            trace,
        } => {
            ops::enhance_one(&config, &input, &out, trace.as_deref())?;
        }
        Command::Evaluate {
            manifest,
            split,
            csv,
            jsonl,
        } => {
            if csv.is_none() && jsonl.is_none() {
                bail!("pass --csv and/or --jsonl to receive the metric table");
            }
            let manifest = DatasetManifest::load(&manifest)?;
            let split = split.as_deref().map(parse_split).transpose()?;
            let rows = ops::evaluate_tables(&manifest, split, csv.as_deref(), jsonl.as_deref())?;
            println!("scored {rows} rows");
        }
        Command::EvalClassifier {
            model,
            manifest,
            report,
            split,
        } => {
            let manifest = DatasetManifest::load(&manifest)?;
            let split = parse_split(&split)?;
            ops::eval_classifier_to(&model, &manifest, split, report.as_deref())?;
        }
        Command::Params { arch, side } => {
            ops::print_arch_accounting(&arch, side)?;
        }
        Command::Histogram { input, out } => {
            ops::histogram_csv(&input, &out)?;
        }
        Command::ReproduceTables {
            out,
            accounting_only,
            models,
            manifest,
            side,
        } => {
            if accounting_only {
                ops::reproduce_tables(&out, side, None, None)?;
            } else {
                let (Some(models), Some(manifest)) = (models.as_deref(), manifest.as_deref())
                else {
                    bail!(
                        "pass --models and --manifest for trained tables, or --accounting-only"
                    );
                };
                ops::reproduce_tables(&out, side, Some(models), Some(manifest))?;
            }
        }
        Command::EndToEnd { config } => {
            let config = RunConfig::load(&config)?;
            if !ops::end_to_end(&config)? {
                return Ok(Outcome::GateFailed);
            }
        }
    }
    Ok(Outcome::Done)
}
