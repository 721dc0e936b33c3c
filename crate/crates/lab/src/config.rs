//! Flat `key=value` experiment configs with dotted sections.
//!
//! ```text
//! name = sym50-pumpout
//! data.source = blobs
//! noise.type = symmetry
//! noise.rate = 0.5
//! train.algorithm = pumpout_sl
//! train.gamma = 0.05
//! ```
//!
//! Blank lines and `#` comments are ignored; unknown keys are rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use pumpout_core::nn::Activation;
use pumpout_core::optim::OptimizerKind;
use pumpout_core::train::Algorithm;
use pumpout_core::TrainConfig;

use crate::dataset::SplitSizes;
use crate::error::{LabError, Result};

pub const KNOWN_KEYS: &[&str] = &[
    "name",
    "data.source",
    "data.seed",
    "data.classes",
    "data.per_class",
    "data.dim",
    "data.spread",
    "data.train",
    "data.validation",
    "data.test",
    "data.limit",
    "data.test_limit",
    "data.train_images",
    "data.train_labels",
    "data.test_images",
    "data.test_labels",
    "noise.type",
    "noise.rate",
    "noise.matrix",
    "noise.seed",
    "noise.allow_majority_flip",
    "train.algorithm",
    "train.gamma",
    "train.batch_size",
    "train.epochs",
    "train.lr",
    "train.optimizer",
    "train.seed",
    "train.tau",
    "train.warmup_epochs",
    "train.eval_interval",
    "model.hidden",
    "model.activation",
    "output.csv",
];

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Blobs {
        classes: usize,
        per_class: usize,
        dim: usize,
        spread: f64,
        /// Explicit split sizes; 70/10/20 when absent.
        sizes: Option<SplitSizes>,
    },
    Mnist {
        train_images: PathBuf,
        train_labels: PathBuf,
        test_images: PathBuf,
        test_labels: PathBuf,
        /// Records read from the test files.
        test_limit: usize,
        /// Trailing training records held out for validation.
        validation: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum NoiseSpec {
    None,
    Pair { rate: f64, allow_majority_flip: bool },
    Symmetry { rate: f64 },
    Custom { matrix: PathBuf },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub source: DataSource,
    pub data_seed: u64,
    /// Cap on the training split size (for MNIST, records read before the
    /// validation hold-out is appended).
    pub train_limit: Option<usize>,
    pub noise: NoiseSpec,
    pub noise_seed: u64,
    pub train: TrainConfig,
    /// `train.tau` was given explicitly rather than derived from the noise.
    pub explicit_tau: bool,
    pub output_csv: Option<PathBuf>,
}

/// `(classes, per_class, dim, spread)`: high enough dimension that an unguarded
/// 64-64 MLP memorizes symmetric noise within 100 epochs.
pub const BLOB_DEFAULTS: (usize, usize, usize, f64) = (5, 1000, 100, 0.22);
pub const BLOB_EPOCHS: usize = 100;
pub const MNIST_EPOCHS: usize = 200;
pub const MNIST_TRAIN_LIMIT: usize = 10_000;
pub const MNIST_TEST_LIMIT: usize = 2_000;

struct Entries {
    values: BTreeMap<String, String>,
    base_dir: PathBuf,
}

impl Entries {
    fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn parse<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(key)
            .map(|v| v.parse::<T>().map_err(|e| LabError::config(key, format!("cannot parse {v:?}: {e}"))))
            .transpose()
    }

    fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.parse(key)?.unwrap_or(default))
    }

    fn path(&self, key: &str) -> Result<PathBuf> {
        let raw = self.raw(key).ok_or_else(|| LabError::config(key, "required for this data source"))?;
        Ok(self.resolve(raw))
    }

    fn resolve(&self, raw: &str) -> PathBuf {
        let p = Path::new(raw);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}

fn parse_entries(text: &str, base_dir: &Path) -> Result<Entries> {
    let mut values = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| LabError::config(format!("line {}", n + 1), format!("expected key=value, got {line:?}")))?;
        let key = key.trim();
        if !KNOWN_KEYS.contains(&key) {
            return Err(LabError::config(key, "unknown key"));
        }
        if values.insert(key.to_string(), value.trim().to_string()).is_some() {
            return Err(LabError::config(key, "key given twice"));
        }
    }
    Ok(Entries { values, base_dir: base_dir.to_path_buf() })
}

fn parse_hidden(raw: &str) -> Result<Vec<usize>> {
    if raw.trim().is_empty() {
        return Ok(Vec::new());
    }
    raw.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .ok()
                .filter(|w| *w > 0)
                .ok_or_else(|| LabError::config("model.hidden", format!("bad layer width {t:?}")))
        })
        .collect()
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("experiment");
        Self::parse(&text, base, stem)
    }

    /// Parses config text; relative paths resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path, default_name: &str) -> Result<Self> {
        let e = parse_entries(text, base_dir)?;
        let name = e.raw("name").unwrap_or(default_name).to_string();
        let data_seed: u64 = e.get("data.seed", 0)?;

        let (source, default_epochs, train_limit) = match e.raw("data.source").unwrap_or("blobs") {
            "blobs" => {
                let (k, n, d, spread) = BLOB_DEFAULTS;
                let classes = e.get("data.classes", k)?;
                let per_class = e.get("data.per_class", n)?;
                let sizes = match (e.parse::<usize>("data.train")?, e.parse("data.validation")?, e.parse("data.test")?) {
                    (None, None, None) => None,
                    (Some(train), Some(validation), Some(test)) => Some(SplitSizes { train, validation, test }),
                    _ => {
                        return Err(LabError::config(
                            "data.train",
                            "data.train, data.validation and data.test must be given together",
                        ))
                    }
                };
                for key in ["data.train_images", "data.train_labels", "data.test_images", "data.test_labels", "data.test_limit"] {
                    if e.raw(key).is_some() {
                        return Err(LabError::config(key, "only valid with data.source=mnist"));
                    }
                }
                let source = DataSource::Blobs {
                    classes,
                    per_class,
                    dim: e.get("data.dim", d)?,
                    spread: e.get("data.spread", spread)?,
                    sizes,
                };
                (source, BLOB_EPOCHS, e.parse("data.limit")?)
            }
            "mnist" => {
                for key in ["data.classes", "data.per_class", "data.dim", "data.spread", "data.train", "data.test"] {
                    if e.raw(key).is_some() {
                        return Err(LabError::config(key, "only valid with data.source=blobs"));
                    }
                }
                let source = DataSource::Mnist {
                    train_images: e.path("data.train_images")?,
                    train_labels: e.path("data.train_labels")?,
                    test_images: e.path("data.test_images")?,
                    test_labels: e.path("data.test_labels")?,
                    test_limit: e.get("data.test_limit", MNIST_TEST_LIMIT)?,
                    validation: e.get("data.validation", 0)?,
                };
                (source, MNIST_EPOCHS, Some(e.get("data.limit", MNIST_TRAIN_LIMIT)?))
            }
            other => return Err(LabError::config("data.source", format!("unknown source {other:?}"))),
        };

        let noise = match e.raw("noise.type").unwrap_or("none") {
            "none" => {
                if e.raw("noise.rate").is_some() {
                    return Err(LabError::config("noise.rate", "given without a noise.type"));
                }
                NoiseSpec::None
            }
            kind @ ("pair" | "symmetry") => {
                let rate: f64 = e
                    .parse("noise.rate")?
                    .ok_or_else(|| LabError::config("noise.rate", format!("required for {kind} noise")))?;
                if kind == "pair" {
                    NoiseSpec::Pair { rate, allow_majority_flip: e.get("noise.allow_majority_flip", false)? }
                } else {
                    NoiseSpec::Symmetry { rate }
                }
            }
            "custom" => NoiseSpec::Custom { matrix: e.path("noise.matrix")? },
            other => return Err(LabError::config("noise.type", format!("unknown noise type {other:?}"))),
        };
        let noise_rate = match &noise {
            NoiseSpec::Pair { rate, .. } | NoiseSpec::Symmetry { rate } => *rate,
            _ => 0.0,
        };

        let defaults = TrainConfig::default();
        let algorithm: Algorithm = match e.raw("train.algorithm") {
            None => defaults.algorithm,
            Some(raw) => raw.parse().map_err(|err: pumpout_core::Error| LabError::config("train.algorithm", err.to_string()))?,
        };
        if algorithm.uses_correction() && noise == NoiseSpec::None {
            return Err(LabError::config(
                "train.algorithm",
                format!("{algorithm} needs a transition matrix: set noise.type"),
            ));
        }
        let optimizer = match e.raw("train.optimizer").unwrap_or("adam") {
            "adam" => OptimizerKind::Adam,
            "sgd" => OptimizerKind::Sgd,
            other => return Err(LabError::config("train.optimizer", format!("unknown optimizer {other:?}"))),
        };
        let activation = match e.raw("model.activation").unwrap_or("softsign") {
            "softsign" => Activation::Softsign,
            "leaky_relu" => Activation::LeakyRelu,
            other => return Err(LabError::config("model.activation", format!("unknown activation {other:?}"))),
        };
        let hidden = match e.raw("model.hidden") {
            Some(raw) => parse_hidden(raw)?,
            None => defaults.hidden.clone(),
        };
        let explicit_tau = e.raw("train.tau").is_some();
        let train = TrainConfig {
            algorithm,
            gamma: e.get("train.gamma", defaults.gamma)?,
            batch_size: e.get("train.batch_size", defaults.batch_size)?,
            learning_rate: e.get("train.lr", defaults.learning_rate)?,
            max_epochs: e.get("train.epochs", default_epochs)?,
            tau: e.get("train.tau", noise_rate)?,
            warmup_epochs: e.get("train.warmup_epochs", defaults.warmup_epochs)?,
            optimizer,
            seed: e.get("train.seed", 0)?,
            eval_interval: e.get("train.eval_interval", defaults.eval_interval)?,
            hidden,
            activation,
        };
        train.validate().map_err(|err| LabError::config("train", err.to_string()))?;

        Ok(Self {
            name,
            source,
            data_seed,
            train_limit,
            noise,
            noise_seed: e.get("noise.seed", data_seed)?,
            train,
            explicit_tau,
            output_csv: e.raw("output.csv").map(|p| e.resolve(p)),
        })
    }
}
