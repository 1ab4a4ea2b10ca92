//! Run configuration files: small TOML or JSON documents validated up
//! front, so long runs never die halfway through on a typo. Unknown keys
//! are rejected, relative paths resolve against the config file's
//! directory, and every omitted field falls back to the library training
//! defaults.

use anyhow::{bail, Context, Result};
use aquaforge::classifier::ClassifierTrainConfig;
use aquaforge::degrade::TierTable;
use aquaforge::enhance::{EnhancerId, EnhancerTrainConfig};
use aquaforge::pipeline::MetricsMode;
use serde::Deserialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

fn default_input_side() -> usize {
    32
}

fn default_max_iterations() -> usize {
    3
}

/// Reference synthesis block: generate this many procedural reference
/// images (at `side` pixels) into `refs_dir` when the directory has none.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthRefsConfig {
    pub count: usize,
    #[serde(default = "default_input_side")]
    pub side: usize,
}

/// Classifier training hyperparameters; defaults mirror
/// [`ClassifierTrainConfig`].
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifierSection {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
}

impl Default for ClassifierSection {
    fn default() -> Self {
        let base = ClassifierTrainConfig::default();
        Self {
            epochs: base.epochs,
            batch_size: base.batch_size,
            learning_rate: base.learning_rate,
        }
    }
}

/// Optional per-enhancer overrides of the shared enhancer hyperparameters.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainOverride {
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub learning_rate: Option<f64>,
}

/// Enhancer training hyperparameters shared by all seven models, plus a
/// `per.<name>` table for model-specific overrides; defaults mirror
/// [`EnhancerTrainConfig`].
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnhancersSection {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub per: BTreeMap<String, TrainOverride>,
}

impl Default for EnhancersSection {
    fn default() -> Self {
        let base = EnhancerTrainConfig::default();
        Self {
            epochs: base.epochs,
            batch_size: base.batch_size,
            learning_rate: base.learning_rate,
            per: BTreeMap::new(),
        }
    }
}

/// Top-level configuration for training runs and `end-to-end`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed for reference synthesis, dataset build, and training.
    pub seed: u64,
    /// Every artifact (dataset, models, reports) lands under this directory.
    pub out_dir: PathBuf,
    /// Directory of reference images; see `synth_refs` for generating one.
    pub refs_dir: PathBuf,
    /// Square working resolution of the whole system.
    #[serde(default = "default_input_side")]
    pub input_side: usize,
    /// Iteration budget of the enhancement loop.
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    /// `full` additionally writes per-image quality tables for the test
    /// split; `none` keeps reports to the gate summaries.
    #[serde(default)]
    pub metrics: MetricsMode,
    /// When present and `refs_dir` holds no images, synthesize references.
    #[serde(default)]
    pub synth_refs: Option<SynthRefsConfig>,
    /// Severity range overrides; omitted means the built-in tier table.
    #[serde(default)]
    pub tiers: Option<TierTable>,
    #[serde(default)]
    pub classifier: ClassifierSection,
    #[serde(default)]
    pub enhancers: EnhancersSection,
}

impl RunConfig {
    /// Loads and validates a config file, resolving relative paths against
    /// its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut config: Self = read_config(path)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        config.out_dir = resolve(base, &config.out_dir);
        config.refs_dir = resolve(base, &config.refs_dir);
        config.validate().with_context(|| format!("invalid config {}", path.display()))?;
        Ok(config)
    }

    fn validate(&self) -> Result<()> {
        if self.input_side < 16 {
            bail!("input_side must be at least 16, got {}", self.input_side);
        }
        if self.max_iterations == 0 {
            bail!("max_iterations must be at least 1");
        }
        if let Some(synth) = &self.synth_refs {
            if synth.count == 0 {
                bail!("synth_refs.count must be at least 1");
            }
            if synth.side < 8 {
                bail!("synth_refs.side must be at least 8, got {}", synth.side);
            }
        }
        for name in self.enhancers.per.keys() {
            if EnhancerId::from_name(name).is_err() {
                bail!(
                    "enhancers.per.{name} is not an enhancer; expected one of: {}",
                    EnhancerId::ALL.map(|id| id.name()).join(", ")
                );
            }
        }
        Ok(())
    }

    /// Effective classifier training configuration.
    pub fn classifier_config(&self) -> ClassifierTrainConfig {
        ClassifierTrainConfig {
            input_side: self.input_side,
            epochs: self.classifier.epochs,
            batch_size: self.classifier.batch_size,
            learning_rate: self.classifier.learning_rate,
            seed: self.seed,
        }
    }

    /// Effective training configuration for one enhancer, with `per.<name>`
    /// overrides applied on top of the shared section.
    pub fn enhancer_config(&self, id: EnhancerId) -> EnhancerTrainConfig {
        let over = self.enhancers.per.get(id.name());
        let pick_usize = |field: fn(&TrainOverride) -> Option<usize>, base: usize| {
            over.and_then(field).unwrap_or(base)
        };
        EnhancerTrainConfig {
            input_side: self.input_side,
            epochs: pick_usize(|o| o.epochs, self.enhancers.epochs),
            batch_size: pick_usize(|o| o.batch_size, self.enhancers.batch_size),
            learning_rate: over
                .and_then(|o| o.learning_rate)
                .unwrap_or(self.enhancers.learning_rate),
            seed: self.seed,
        }
    }
}

/// Configuration of the `enhance` command: which models to run and how the
/// iterative loop behaves.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineFileConfig {
    /// Classifier checkpoint path.
    pub classifier: PathBuf,
    /// Directory holding the seven enhancer checkpoints (`<name>.aqfn`).
    pub enhancers: PathBuf,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    /// `full` records quality snapshots per iteration (needs `reference`
    /// for the fidelity ones).
    #[serde(default)]
    pub metrics: MetricsMode,
    /// Optional clean reference for fidelity snapshots.
    #[serde(default)]
    pub reference: Option<PathBuf>,
}

impl PipelineFileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let mut config: Self = read_config(path)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        config.classifier = resolve(base, &config.classifier);
        config.enhancers = resolve(base, &config.enhancers);
        config.reference = config.reference.map(|p| resolve(base, &p));
        if config.max_iterations == 0 {
            bail!("max_iterations must be at least 1 in {}", path.display());
        }
        Ok(config)
    }
}

fn resolve(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

/// Parses a config file as TOML or JSON, picked by extension.
fn read_config<C: serde::de::DeserializeOwned>(path: &Path) -> Result<C> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    match ext {
        "toml" => toml::from_str(&text).with_context(|| format!("parsing {}", path.display())),
        "json" => {
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
        }
        other => bail!(
            "config {} has unsupported extension {other:?} (expected .toml or .json)",
            path.display()
        ),
    }
}
