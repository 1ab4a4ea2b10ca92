//! Synthetic underwater degradations and the paired dataset builder.
//!
//! Eight degradation families model common underwater capture defects, each
//! at three severity tiers (A mild, B moderate, C severe):
//!
//! - low illumination: uniform brightness scaling `v·s_b`
//! - high contrast: stretch about mid-gray, `clamp(α·v + (1−α)/2)`
//! - haze: convex blend toward a bright haze color, `(1−γ)·v + γ·c`
//! - blur: Gaussian convolution with replicate borders
//! - noise: additive white Gaussian noise, clamped
//! - red/green/blue tint: push one channel toward full intensity,
//!   `v·(1−f) + f`, other channels untouched
//!
//! Parameters are drawn from tier-specific ranges by a counter-based keyed
//! generator, so a `(master seed, image id, class, tier)` tuple always yields
//! the same degraded bytes. [`build_dataset`] applies every degradation to
//! every reference image and records the pairing in a JSON-lines manifest.

use crate::image::{io, ops, ImageError, ImageF};
use crate::rng::{derive_key, hash_bytes, KeyedRng};
use crate::scalar::Scalar;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::BufRead;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DegradeError {
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error("cannot sample parameters for NoDegradation")]
    NothingToSample,
    #[error("degradation parameter `{name}` = {value} outside {lo}..={hi}")]
    BadParam {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("spec for {class:?} is missing parameter `{name}`")]
    MissingParam { class: DegradationClass, name: &'static str },
    #[error("no reference images found under {0}")]
    EmptyReferenceDir(PathBuf),
    #[error("manifest i/o failure on {path}: {source}")]
    ManifestIo {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("manifest parse failure on {path} line {line}: {reason}")]
    ManifestParse { path: PathBuf, line: usize, reason: String },
    #[error("unknown class code {0}")]
    UnknownClassCode(u8),
    #[error("unknown tier `{0}` (expected a, b, or c)")]
    UnknownTier(String),
}

/// The nine classes the system reasons about: eight degradations plus the
/// clean "no degradation" outcome. Integer codes are stable and used in
/// label files: the degradations occupy 0..=7 and NoDegradation is 8.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegradationClass {
    LowIllumination = 0,
    HighContrast = 1,
    Hazy = 2,
    Blurry = 3,
    Noisy = 4,
    Reddish = 5,
    Greenish = 6,
    Bluish = 7,
    NoDegradation = 8,
}

impl DegradationClass {
    /// All nine classes in code order.
    pub const ALL: [DegradationClass; 9] = [
        DegradationClass::LowIllumination,
        DegradationClass::HighContrast,
        DegradationClass::Hazy,
        DegradationClass::Blurry,
        DegradationClass::Noisy,
        DegradationClass::Reddish,
        DegradationClass::Greenish,
        DegradationClass::Bluish,
        DegradationClass::NoDegradation,
    ];

    /// The eight actual degradations (codes 0..=7).
    pub const DEGRADATIONS: [DegradationClass; 8] = [
        DegradationClass::LowIllumination,
        DegradationClass::HighContrast,
        DegradationClass::Hazy,
        DegradationClass::Blurry,
        DegradationClass::Noisy,
        DegradationClass::Reddish,
        DegradationClass::Greenish,
        DegradationClass::Bluish,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Result<Self, DegradeError> {
        Self::ALL
            .get(code as usize)
            .copied()
            .ok_or(DegradeError::UnknownClassCode(code))
    }

    /// Stable snake_case name used in ids, file names, and reports.
    pub fn name(self) -> &'static str {
        match self {
            DegradationClass::LowIllumination => "low_illumination",
            DegradationClass::HighContrast => "high_contrast",
            DegradationClass::Hazy => "hazy",
            DegradationClass::Blurry => "blurry",
            DegradationClass::Noisy => "noisy",
            DegradationClass::Reddish => "reddish",
            DegradationClass::Greenish => "greenish",
            DegradationClass::Bluish => "bluish",
            DegradationClass::NoDegradation => "no_degradation",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|c| c.name() == name)
    }

    /// The RGB channel a tint class pushes, if any.
    pub fn tint_channel(self) -> Option<usize> {
        match self {
            DegradationClass::Reddish => Some(0),
            DegradationClass::Greenish => Some(1),
            DegradationClass::Bluish => Some(2),
            _ => None,
        }
    }
}

impl fmt::Display for DegradationClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Severity tier: A mild, B moderate, C severe.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeverityTier {
    A,
    B,
    C,
}

impl SeverityTier {
    pub const ALL: [SeverityTier; 3] = [SeverityTier::A, SeverityTier::B, SeverityTier::C];

    pub fn name(self) -> &'static str {
        match self {
            SeverityTier::A => "a",
            SeverityTier::B => "b",
            SeverityTier::C => "c",
        }
    }

    pub fn from_name(name: &str) -> Result<Self, DegradeError> {
        match name {
            "a" | "A" => Ok(SeverityTier::A),
            "b" | "B" => Ok(SeverityTier::B),
            "c" | "C" => Ok(SeverityTier::C),
            other => Err(DegradeError::UnknownTier(other.to_string())),
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for SeverityTier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `(lo, hi)` half-open sampling ranges per tier; `lo == hi` means constant.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TierRange {
    pub a: (f64, f64),
    pub b: (f64, f64),
    pub c: (f64, f64),
}

impl TierRange {
    fn get(&self, tier: SeverityTier) -> (f64, f64) {
        [self.a, self.b, self.c][tier.index()]
    }
}

/// Per-class severity ranges used when sampling degradation parameters.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TierTable {
    /// Brightness scale `s_b` for low illumination (smaller = darker).
    pub illumination_scale: TierRange,
    /// Contrast gain `α` (larger = harsher stretch).
    pub contrast_alpha: TierRange,
    /// Haze blend weight `γ`.
    pub haze_gamma: TierRange,
    /// Per-channel haze color range (shared by R, G, B draws).
    pub haze_color: (f64, f64),
    /// Gaussian blur σ (constant per tier).
    pub blur_sigma: TierRange,
    /// Additive noise σ (constant per tier).
    pub noise_sigma: TierRange,
    /// Tint blend factor (larger = stronger cast).
    pub tint_factor: TierRange,
}

impl Default for TierTable {
    fn default() -> Self {
        Self {
            illumination_scale: TierRange {
                a: (0.5, 0.7),
                b: (0.3, 0.5),
                c: (0.1, 0.3),
            },
            contrast_alpha: TierRange {
                a: (1.3, 1.7),
                b: (1.7, 2.2),
                c: (2.2, 3.0),
            },
            haze_gamma: TierRange {
                a: (0.30, 0.45),
                b: (0.45, 0.60),
                c: (0.60, 0.80),
            },
            haze_color: (0.70, 1.0),
            blur_sigma: TierRange {
                a: (1.5, 1.5),
                b: (3.0, 3.0),
                c: (5.0, 5.0),
            },
            noise_sigma: TierRange {
                a: (0.05, 0.05),
                b: (0.10, 0.10),
                c: (0.15, 0.15),
            },
            tint_factor: TierRange {
                a: (0.25, 0.40),
                b: (0.40, 0.55),
                c: (0.55, 0.70),
            },
        }
    }
}

/// A fully-sampled degradation: class, severity tier, and the concrete
/// parameter values drawn for one image.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct DegradationSpec {
    pub class: DegradationClass,
    pub tier: SeverityTier,
    /// Named parameters; exactly the keys the class requires.
    pub params: BTreeMap<String, f64>,
}

impl DegradationSpec {
    fn param(&self, name: &'static str) -> Result<f64, DegradeError> {
        self.params
            .get(name)
            .copied()
            .ok_or(DegradeError::MissingParam {
                class: self.class,
                name,
            })
    }
}

/// Stream tags separating the independent random uses of one image seed.
const STREAM_SAMPLE: u64 = 1;
const STREAM_NOISE: u64 = 2;

/// Draws concrete degradation parameters for `(class, tier)` from the default
/// tier table. Deterministic in `seed`.
pub fn sample_spec(
    class: DegradationClass,
    tier: SeverityTier,
    seed: u64,
) -> Result<DegradationSpec, DegradeError> {
    sample_spec_with(&TierTable::default(), class, tier, seed)
}

/// [`sample_spec`] with an explicit tier table (severity overrides).
pub fn sample_spec_with(
    table: &TierTable,
    class: DegradationClass,
    tier: SeverityTier,
    seed: u64,
) -> Result<DegradationSpec, DegradeError> {
    let mut rng = KeyedRng::new(derive_key(seed, &[STREAM_SAMPLE]));
    let mut draw = |range: (f64, f64)| {
        if range.0 == range.1 {
            range.0
        } else {
            rng.uniform_in(range.0, range.1)
        }
    };
    let mut params = BTreeMap::new();
    match class {
        DegradationClass::NoDegradation => return Err(DegradeError::NothingToSample),
        DegradationClass::LowIllumination => {
            params.insert("s_b".into(), draw(table.illumination_scale.get(tier)));
        }
        DegradationClass::HighContrast => {
            let alpha = draw(table.contrast_alpha.get(tier));
            params.insert("alpha".into(), alpha);
            params.insert("beta".into(), (1.0 - alpha) / 2.0);
        }
        DegradationClass::Hazy => {
            params.insert("gamma".into(), draw(table.haze_gamma.get(tier)));
            params.insert("color_r".into(), draw(table.haze_color));
            params.insert("color_g".into(), draw(table.haze_color));
            params.insert("color_b".into(), draw(table.haze_color));
        }
        DegradationClass::Blurry => {
            params.insert("sigma".into(), draw(table.blur_sigma.get(tier)));
        }
        DegradationClass::Noisy => {
            params.insert("sigma".into(), draw(table.noise_sigma.get(tier)));
        }
        DegradationClass::Reddish | DegradationClass::Greenish | DegradationClass::Bluish => {
            params.insert("factor".into(), draw(table.tint_factor.get(tier)));
        }
    }
    Ok(DegradationSpec { class, tier, params })
}

fn check_range(
    name: &'static str,
    value: f64,
    lo: f64,
    hi: f64,
) -> Result<(), DegradeError> {
    if !(value >= lo && value <= hi) {
        return Err(DegradeError::BadParam { name, value, lo, hi });
    }
    Ok(())
}

/// Uniform brightness scaling `v·s_b` with `0 < s_b ≤ 1`.
pub fn degrade_illumination<T: Scalar>(
    img: &ImageF<T>,
    s_b: f64,
) -> Result<ImageF<T>, DegradeError> {
    check_range("s_b", s_b, f64::MIN_POSITIVE, 1.0)?;
    let s = T::of(s_b);
    Ok(ImageF::from_fn(img.height(), img.width(), img.channels(), |y, x, c| {
        img.get(y, x, c) * s
    })?)
}

/// Contrast stretch about mid-gray: `clamp(α·v + (1−α)/2)` with `α ≥ 1`.
///
/// The offset keeps mid-gray fixed while pushing values toward the extremes.
pub fn degrade_contrast<T: Scalar>(img: &ImageF<T>, alpha: f64) -> Result<ImageF<T>, DegradeError> {
    check_range("alpha", alpha, 1.0, f64::MAX)?;
    let a = T::of(alpha);
    let beta = T::of((1.0 - alpha) / 2.0);
    Ok(ImageF::from_fn(img.height(), img.width(), img.channels(), |y, x, c| {
        a * img.get(y, x, c) + beta
    })?)
}

/// Haze: convex blend `(1−γ)·v + γ·color[c]` toward a bright haze color.
pub fn degrade_haze<T: Scalar>(
    img: &ImageF<T>,
    gamma: f64,
    color: [f64; 3],
) -> Result<ImageF<T>, DegradeError> {
    check_range("gamma", gamma, 0.0, 1.0)?;
    for (i, &ch) in color.iter().enumerate() {
        check_range(["color_r", "color_g", "color_b"][i], ch, 0.0, 1.0)?;
    }
    if img.channels() != 3 {
        return Err(DegradeError::Image(ImageError::WrongChannelCount {
            expected: 3,
            got: img.channels(),
        }));
    }
    let g = T::of(gamma);
    let keep = T::one() - g;
    let tinted: [T; 3] = [
        T::of(color[0]) * g,
        T::of(color[1]) * g,
        T::of(color[2]) * g,
    ];
    Ok(ImageF::from_fn(img.height(), img.width(), 3, |y, x, c| {
        keep * img.get(y, x, c) + tinted[c]
    })?)
}

/// Gaussian blur with replicate borders; kernel side is `2·ceil(3σ)+1`.
pub fn degrade_blur<T: Scalar>(img: &ImageF<T>, sigma: f64) -> Result<ImageF<T>, DegradeError> {
    check_range("sigma", sigma, f64::MIN_POSITIVE, f64::MAX)?;
    let kernel = ops::gaussian_kernel::<T>(sigma);
    let planes: Vec<_> = (0..img.channels())
        .map(|c| ops::convolve2d(&img.plane(c), &kernel))
        .collect();
    Ok(ImageF::from_planes(&planes)?)
}

/// Additive white Gaussian noise `clamp(v + N(0, σ²))`, deterministic in the
/// key: the per-sample draws consume the key's counter stream in `(y, x, c)`
/// order.
pub fn degrade_noise<T: Scalar>(
    img: &ImageF<T>,
    sigma: f64,
    key: u64,
) -> Result<ImageF<T>, DegradeError> {
    check_range("sigma", sigma, 0.0, f64::MAX)?;
    let mut rng = KeyedRng::new(key);
    Ok(ImageF::from_fn(img.height(), img.width(), img.channels(), |y, x, c| {
        img.get(y, x, c) + T::of(rng.gaussian() * sigma)
    })?)
}

/// Tint: pushes `channel` toward full intensity, `v·(1−f) + f`; the other
/// channels are copied bit-for-bit.
pub fn degrade_tint<T: Scalar>(
    img: &ImageF<T>,
    channel: usize,
    factor: f64,
) -> Result<ImageF<T>, DegradeError> {
    check_range("factor", factor, 0.0, 1.0)?;
    if img.channels() != 3 {
        return Err(DegradeError::Image(ImageError::WrongChannelCount {
            expected: 3,
            got: img.channels(),
        }));
    }
    assert!(channel < 3, "tint channel out of range");
    let f = T::of(factor);
    let keep = T::one() - f;
    let mut out = img.clone();
    for y in 0..img.height() {
        for x in 0..img.width() {
            out.set(y, x, channel, img.get(y, x, channel) * keep + f);
        }
    }
    Ok(out)
}

/// Applies a sampled spec to an image. `seed` is the manifest row seed; only
/// the noise degradation consumes randomness (on its own derived stream).
pub fn apply<T: Scalar>(
    img: &ImageF<T>,
    spec: &DegradationSpec,
    seed: u64,
) -> Result<ImageF<T>, DegradeError> {
    match spec.class {
        DegradationClass::NoDegradation => Ok(img.clone()),
        DegradationClass::LowIllumination => degrade_illumination(img, spec.param("s_b")?),
        DegradationClass::HighContrast => degrade_contrast(img, spec.param("alpha")?),
        DegradationClass::Hazy => degrade_haze(
            img,
            spec.param("gamma")?,
            [
                spec.param("color_r")?,
                spec.param("color_g")?,
                spec.param("color_b")?,
            ],
        ),
        DegradationClass::Blurry => degrade_blur(img, spec.param("sigma")?),
        DegradationClass::Noisy => {
            degrade_noise(img, spec.param("sigma")?, derive_key(seed, &[STREAM_NOISE]))
        }
        DegradationClass::Reddish | DegradationClass::Greenish | DegradationClass::Bluish => {
            degrade_tint(
                img,
                spec.class.tint_channel().expect("tint class"),
                spec.param("factor")?,
            )
        }
    }
}

/// One dataset entry: a reference image paired with one degraded variant
/// (or with itself for NoDegradation rows, whose `tier` is `null`).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ManifestRow {
    pub id: String,
    pub reference_path: PathBuf,
    pub degraded_path: PathBuf,
    pub class_code: u8,
    pub tier: Option<SeverityTier>,
    pub params: BTreeMap<String, f64>,
    pub seed: u64,
}

impl ManifestRow {
    pub fn class(&self) -> Result<DegradationClass, DegradeError> {
        DegradationClass::from_code(self.class_code)
    }
}

/// Deterministic 80/20 split assignment, hashed from the row id.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

/// Split for a manifest row id: ~20% of reference stems land in `Test`.
///
/// The hash uses only the reference stem (the id's leading segment), so all
/// degraded variants of one reference land in the same split and the test
/// set contains genuinely unseen content.
pub fn split_of(id: &str) -> Split {
    let stem = id.split("__").next().unwrap_or(id);
    if hash_bytes(stem.as_bytes()) % 5 == 4 {
        Split::Test
    } else {
        Split::Train
    }
}

/// The dataset manifest: rows sorted by id, plus the directory that relative
/// paths are resolved against.
#[derive(Clone, Debug)]
pub struct DatasetManifest {
    pub rows: Vec<ManifestRow>,
    /// Directory of the manifest file; relative row paths resolve here.
    pub root: PathBuf,
}

impl DatasetManifest {
    /// Number of degraded images (NoDegradation rows are references, not new
    /// files, and do not count).
    pub fn degraded_count(&self) -> usize {
        self.rows
            .iter()
            .filter(|r| r.class_code != DegradationClass::NoDegradation.code())
            .count()
    }

    /// Tier histogram `[A, B, C]` for one class.
    pub fn tier_counts(&self, class: DegradationClass) -> [usize; 3] {
        let mut counts = [0usize; 3];
        for row in &self.rows {
            if row.class_code == class.code() {
                if let Some(t) = row.tier {
                    counts[t.index()] += 1;
                }
            }
        }
        counts
    }

    pub fn rows_for_class(&self, class: DegradationClass) -> impl Iterator<Item = &ManifestRow> {
        self.rows.iter().filter(move |r| r.class_code == class.code())
    }

    pub fn rows_in_split(&self, split: Split) -> impl Iterator<Item = &ManifestRow> {
        self.rows.iter().filter(move |r| split_of(&r.id) == split)
    }

    /// Resolves a row path: absolute paths pass through, relative ones are
    /// joined to the manifest directory.
    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.root.join(path)
        }
    }

    /// Writes the manifest as JSON lines.
    pub fn save(&self, path: &Path) -> Result<(), DegradeError> {
        let mut out = Vec::new();
        for row in &self.rows {
            serde_json::to_writer(&mut out, row).expect("manifest row serializes");
            out.push(b'\n');
        }
        fs::write(path, out).map_err(|source| DegradeError::ManifestIo {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Reads a JSON-lines manifest.
    pub fn load(path: &Path) -> Result<Self, DegradeError> {
        let file = fs::File::open(path).map_err(|source| DegradeError::ManifestIo {
            path: path.to_path_buf(),
            source,
        })?;
        let reader = std::io::BufReader::new(file);
        let mut rows = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|source| DegradeError::ManifestIo {
                path: path.to_path_buf(),
                source,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let row: ManifestRow =
                serde_json::from_str(&line).map_err(|e| DegradeError::ManifestParse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    reason: e.to_string(),
                })?;
            rows.push(row);
        }
        let root = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        Ok(Self { rows, root })
    }
}

/// Tier for reference index `i` of `n` under the contiguous block split:
/// the first `⌊n/k⌋` references take the first tier, the next `⌊n/k⌋` the
/// second, and the remainder the last, reproducing the `{296, 296, 298}`
/// style splits the dataset tables use.
fn tier_for_index(i: usize, n: usize, tiers: &[SeverityTier]) -> SeverityTier {
    let k = tiers.len();
    debug_assert!(k > 0);
    let per = n / k;
    if per == 0 {
        return tiers[i.min(k - 1)];
    }
    tiers[(i / per).min(k - 1)]
}

/// Collects reference image paths (`.png`/`.ppm`) sorted by file name.
fn collect_references(dir: &Path) -> Result<Vec<PathBuf>, DegradeError> {
    let entries = fs::read_dir(dir).map_err(|source| DegradeError::ManifestIo {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut refs: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            matches!(
                p.extension().and_then(|e| e.to_str()),
                Some("png") | Some("ppm")
            )
        })
        .collect();
    refs.sort();
    if refs.is_empty() {
        return Err(DegradeError::EmptyReferenceDir(dir.to_path_buf()));
    }
    Ok(refs)
}

/// Builds the degraded dataset: every reference image × every degradation
/// class, tiers assigned by the contiguous block split, plus one
/// NoDegradation row per reference pointing back at the reference file.
///
/// Degraded images are written as PNG under `out_dir/images/`, the manifest
/// as `out_dir/manifest.jsonl`. The whole build is a pure function of the
/// reference bytes, the tier list, and `master_seed`: rebuilding produces
/// byte-identical files.
pub fn build_dataset<T: Scalar>(
    reference_dir: &Path,
    out_dir: &Path,
    tiers_per_class: &[SeverityTier],
    master_seed: u64,
) -> Result<DatasetManifest, DegradeError> {
    build_dataset_with::<T>(
        &TierTable::default(),
        reference_dir,
        out_dir,
        tiers_per_class,
        master_seed,
    )
}

/// [`build_dataset`] with an explicit tier table.
pub fn build_dataset_with<T: Scalar>(
    table: &TierTable,
    reference_dir: &Path,
    out_dir: &Path,
    tiers_per_class: &[SeverityTier],
    master_seed: u64,
) -> Result<DatasetManifest, DegradeError> {
    assert!(!tiers_per_class.is_empty(), "tier list must be non-empty");
    let refs = collect_references(reference_dir)?;
    let images_dir = out_dir.join("images");
    fs::create_dir_all(&images_dir).map_err(|source| DegradeError::ManifestIo {
        path: images_dir.clone(),
        source,
    })?;

    // One work item per (reference, class); images are independent, so the
    // loop parallelizes freely and determinism comes from per-item seeds.
    struct Job {
        ref_index: usize,
        class: DegradationClass,
    }
    let jobs: Vec<Job> = refs
        .iter()
        .enumerate()
        .flat_map(|(ref_index, _)| {
            DegradationClass::DEGRADATIONS
                .iter()
                .map(move |&class| Job { ref_index, class })
        })
        .collect();

    let mut rows: Vec<ManifestRow> = jobs
        .par_iter()
        .map(|job| -> Result<ManifestRow, DegradeError> {
            let ref_path = &refs[job.ref_index];
            let stem = ref_path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("ref")
                .to_string();
            let tier = tier_for_index(job.ref_index, refs.len(), tiers_per_class);
            let id = format!("{stem}__{}_{}", job.class.name(), tier.name());
            let seed = derive_key(
                master_seed,
                &[
                    hash_bytes(stem.as_bytes()),
                    u64::from(job.class.code()),
                    tier.index() as u64,
                ],
            );
            let spec = sample_spec_with(table, job.class, tier, seed)?;
            let reference = io::load_image::<T>(ref_path)?;
            let degraded = apply(&reference, &spec, seed)?;
            let file_name = format!("{id}.png");
            io::save_png(&degraded, &images_dir.join(&file_name))?;
            Ok(ManifestRow {
                id,
                reference_path: absolute(ref_path),
                degraded_path: PathBuf::from("images").join(file_name),
                class_code: job.class.code(),
                tier: Some(tier),
                params: spec.params,
                seed,
            })
        })
        .collect::<Result<_, _>>()?;

    // NoDegradation rows: the reference itself, no new file.
    for ref_path in &refs {
        let stem = ref_path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("ref")
            .to_string();
        let id = format!("{stem}__no_degradation");
        rows.push(ManifestRow {
            id,
            reference_path: absolute(ref_path),
            degraded_path: absolute(ref_path),
            class_code: DegradationClass::NoDegradation.code(),
            tier: None,
            params: BTreeMap::new(),
            seed: 0,
        });
    }

    rows.sort_by(|a, b| a.id.cmp(&b.id));
    let manifest = DatasetManifest {
        rows,
        root: out_dir.to_path_buf(),
    };
    manifest.save(&out_dir.join("manifest.jsonl"))?;
    Ok(manifest)
}

fn absolute(path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        std::env::current_dir()
            .map(|cwd| cwd.join(path))
            .unwrap_or_else(|_| path.to_path_buf())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_image() -> ImageF<f64> {
        ImageF::from_fn(8, 8, 3, |y, x, c| {
            ((y * 29 + x * 13 + c * 7) % 64) as f64 / 63.0
        })
        .unwrap()
    }

    #[test]
    fn sample_spec_is_deterministic() {
        let a = sample_spec(DegradationClass::Hazy, SeverityTier::B, 99).unwrap();
        let b = sample_spec(DegradationClass::Hazy, SeverityTier::B, 99).unwrap();
        assert_eq!(a, b);
        let c = sample_spec(DegradationClass::Hazy, SeverityTier::B, 100).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn sample_spec_respects_tier_ranges() {
        for seed in 0..200 {
            let s = sample_spec(DegradationClass::LowIllumination, SeverityTier::C, seed)
                .unwrap();
            let v = s.params["s_b"];
            assert!((0.1..0.3).contains(&v), "s_b {v}");

            let s = sample_spec(DegradationClass::HighContrast, SeverityTier::A, seed).unwrap();
            let alpha = s.params["alpha"];
            assert!((1.3..1.7).contains(&alpha));
            assert!((s.params["beta"] - (1.0 - alpha) / 2.0).abs() < 1e-15);

            let s = sample_spec(DegradationClass::Hazy, SeverityTier::B, seed).unwrap();
            assert!((0.45..0.60).contains(&s.params["gamma"]));
            for key in ["color_r", "color_g", "color_b"] {
                assert!((0.70..1.0).contains(&s.params[key]));
            }

            let s = sample_spec(DegradationClass::Reddish, SeverityTier::C, seed).unwrap();
            assert!((0.55..0.70).contains(&s.params["factor"]));
        }
    }

    #[test]
    fn blur_and_noise_sigmas_are_tier_constants() {
        for (tier, blur, noise) in [
            (SeverityTier::A, 1.5, 0.05),
            (SeverityTier::B, 3.0, 0.10),
            (SeverityTier::C, 5.0, 0.15),
        ] {
            let s = sample_spec(DegradationClass::Blurry, tier, 5).unwrap();
            assert_eq!(s.params["sigma"], blur);
            let s = sample_spec(DegradationClass::Noisy, tier, 5).unwrap();
            assert_eq!(s.params["sigma"], noise);
        }
    }

    #[test]
    fn sample_spec_rejects_no_degradation() {
        assert!(matches!(
            sample_spec(DegradationClass::NoDegradation, SeverityTier::A, 1),
            Err(DegradeError::NothingToSample)
        ));
    }

    #[test]
    fn illumination_scales_every_sample() {
        let img = test_image();
        let out = degrade_illumination(&img, 0.5).unwrap();
        for (o, i) in out.data().iter().zip(img.data()) {
            assert!((o - i * 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn contrast_fixes_midgray_and_clamps() {
        let mid = ImageF::<f64>::filled(2, 2, 3, 0.5).unwrap();
        let out = degrade_contrast(&mid, 2.0).unwrap();
        for &v in out.data() {
            assert!((v - 0.5f64).abs() < 1e-15);
        }
        let bright = ImageF::<f64>::filled(2, 2, 3, 0.9).unwrap();
        let out = degrade_contrast(&bright, 3.0).unwrap();
        // 3·0.9 − 1 = 1.7 clamps to 1.
        assert!(out.data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn haze_blends_toward_color() {
        let img = ImageF::<f64>::filled(2, 2, 3, 0.2).unwrap();
        let out = degrade_haze(&img, 0.5, [0.8, 0.9, 1.0]).unwrap();
        let want = [0.5, 0.55, 0.6];
        for c in 0..3 {
            assert!((out.get(0, 0, c) - want[c]).abs() < 1e-12);
        }
    }

    #[test]
    fn haze_gamma_one_is_constant_color() {
        let img = test_image();
        let out = degrade_haze(&img, 1.0, [0.75, 0.8, 0.85]).unwrap();
        for y in 0..img.height() {
            for x in 0..img.width() {
                assert!((out.get(y, x, 0) - 0.75f64).abs() < 1e-12);
                assert!((out.get(y, x, 1) - 0.8f64).abs() < 1e-12);
                assert!((out.get(y, x, 2) - 0.85f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn blur_preserves_constant_images() {
        let img = ImageF::<f64>::filled(6, 6, 3, 0.33).unwrap();
        let out = degrade_blur(&img, 1.5).unwrap();
        for &v in out.data() {
            assert!((v - 0.33f64).abs() < 1e-12);
        }
    }

    #[test]
    fn blur_reduces_edge_contrast() {
        let img = ImageF::<f64>::from_fn(8, 8, 3, |_, x, _| if x < 4 { 0.0 } else { 1.0 })
            .unwrap();
        let out = degrade_blur(&img, 1.5).unwrap();
        // Samples adjacent to the edge move strictly toward mid-gray.
        assert!(out.get(4, 3, 0) > 0.05);
        assert!(out.get(4, 4, 0) < 0.95);
    }

    #[test]
    fn noise_is_seeded_and_clamped() {
        let img = test_image();
        let a = degrade_noise(&img, 0.1, 7).unwrap();
        let b = degrade_noise(&img, 0.1, 7).unwrap();
        assert_eq!(a, b);
        let c = degrade_noise(&img, 0.1, 8).unwrap();
        assert_ne!(a, c);
        assert!(a.data().iter().all(|&v| (0.0..=1.0).contains(&v)));
        // Zero sigma is the identity.
        let z = degrade_noise(&img, 0.0, 7).unwrap();
        assert_eq!(z, img);
    }

    #[test]
    fn tint_touches_only_selected_channel() {
        let img = test_image();
        let out = degrade_tint(&img, 1, 0.4).unwrap();
        for y in 0..img.height() {
            for x in 0..img.width() {
                // Untouched channels are bit-identical.
                assert!(out.get(y, x, 0) == img.get(y, x, 0));
                assert!(out.get(y, x, 2) == img.get(y, x, 2));
                let want = img.get(y, x, 1) * 0.6 + 0.4;
                assert!((out.get(y, x, 1) - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn tint_factor_one_saturates_channel() {
        let img = test_image();
        let out = degrade_tint(&img, 0, 1.0).unwrap();
        for y in 0..img.height() {
            for x in 0..img.width() {
                assert_eq!(out.get(y, x, 0), 1.0);
            }
        }
    }

    #[test]
    fn apply_no_degradation_is_identity() {
        let img = test_image();
        let spec = DegradationSpec {
            class: DegradationClass::NoDegradation,
            tier: SeverityTier::A,
            params: BTreeMap::new(),
        };
        assert_eq!(apply(&img, &spec, 3).unwrap(), img);
    }

    #[test]
    fn apply_dispatches_by_class() {
        let img = test_image();
        for class in DegradationClass::DEGRADATIONS {
            let spec = sample_spec(class, SeverityTier::B, 11).unwrap();
            let out = apply(&img, &spec, 11).unwrap();
            assert_ne!(out, img, "{class} should change the image");
        }
    }

    #[test]
    fn class_codes_are_stable() {
        assert_eq!(DegradationClass::LowIllumination.code(), 0);
        assert_eq!(DegradationClass::Noisy.code(), 4);
        assert_eq!(DegradationClass::NoDegradation.code(), 8);
        for class in DegradationClass::ALL {
            assert_eq!(DegradationClass::from_code(class.code()).unwrap(), class);
            assert_eq!(DegradationClass::from_name(class.name()), Some(class));
        }
        assert!(DegradationClass::from_code(9).is_err());
    }

    #[test]
    fn tier_block_split_matches_published_counts() {
        let tiers = SeverityTier::ALL;
        let count = |n: usize| {
            let mut c = [0usize; 3];
            for i in 0..n {
                c[tier_for_index(i, n, &tiers).index()] += 1;
            }
            c
        };
        assert_eq!(count(890), [296, 296, 298]);
        assert_eq!(count(3140), [1046, 1046, 1048]);
        assert_eq!(count(3700), [1233, 1233, 1234]);
        assert_eq!(count(2185), [728, 728, 729]);
        assert_eq!(count(3138), [1046, 1046, 1046]);
        assert_eq!(count(3), [1, 1, 1]);
        assert_eq!(count(1), [1, 0, 0]);
    }

    #[test]
    fn split_is_deterministic_and_roughly_80_20() {
        let ids: Vec<String> = (0..1000).map(|i| format!("ref_{i:04}__hazy_b")).collect();
        let test_count = ids.iter().filter(|id| split_of(id) == Split::Test).count();
        assert!((130..270).contains(&test_count), "test fraction {test_count}/1000");
        for id in &ids {
            assert_eq!(split_of(id), split_of(id));
        }
        // All variants of one reference share a split.
        assert_eq!(split_of("img7__hazy_b"), split_of("img7__noisy_c"));
    }
}
